# Sampling module
