"""
Built-in Problem Registry
Expression strings and baked parameters for the named problems
"""

# ===================== BUILT-IN PROBLEMS =====================
# Nonlinearity entries are (coefficient, power of v, power of Dv) for the
# PDE  dt v + b Dv + sum c v^a (Dv)^b = 0.
builtin_problems = {
    # Linear transport, v(t,x) = 10 cos(x - t - 5)
    "paper-linear": {
        "drift": "1",
        "terminal": "10*cos(x-6)",
        "terminal_d1": "-10*sin(x-6)",
        "terminal_d2": "-10*cos(x-6)",
        "analytic": "10*cos(x-t-5)",
        "t": 0.0,
        "x": 10.0,
        "t_end": 1.0,
        "nonlinearity": (),
        "perturbation_sigma": 0.1,
    },

    # dt v + Dv + ((Dv)^2 + v^2 - 1)/10 = 0, v(t,x) = cos(t - x)
    "paper-nonlinear": {
        "drift": "1",
        "terminal": "cos(1-x)",
        "terminal_d1": "sin(1-x)",
        "terminal_d2": "-cos(1-x)",
        "analytic": "cos(t-x)",
        "t": 0.0,
        "x": 1.0,
        "t_end": 1.0,
        "nonlinearity": ((0.1, 0, 2), (0.1, 2, 0), (-0.1, 0, 0)),
        "perturbation_sigma": 1.0,
    },

    # Exactly solvable mean for CI calibration, v(t,x) = x + (T - t)
    "constant-drift-linear": {
        "drift": "1",
        "terminal": "x",
        "terminal_d1": "1",
        "terminal_d2": "0",
        "analytic": "x+1-t",
        "t": 0.0,
        "x": 0.0,
        "t_end": 1.0,
        "nonlinearity": (),
        "perturbation_sigma": 0.1,
    },

    # Source term h = 1/2, v(t,x) = cos(x + 1 - t) + (1 - t)/2
    "source-term": {
        "drift": "1",
        "terminal": "cos(x)",
        "terminal_d1": "-sin(x)",
        "terminal_d2": "-cos(x)",
        "analytic": "cos(x+1-t)+(1-t)/2",
        "t": 0.0,
        "x": 0.0,
        "t_end": 1.0,
        "nonlinearity": ((0.5, 0, 0),),
        "perturbation_sigma": 0.1,
    },
}

# Alternative spellings accepted on the command line and in config files
PROBLEM_ALIASES = {
    "linear": "paper-linear",
    "nonlinear": "paper-nonlinear",
    "calibration": "constant-drift-linear",
    "source": "source-term",
}
