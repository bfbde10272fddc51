# Paths module
