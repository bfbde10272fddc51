# Source code modules
