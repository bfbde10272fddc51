# Estimators module
