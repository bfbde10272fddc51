# Weights module
