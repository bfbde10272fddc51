# Monte Carlo module
