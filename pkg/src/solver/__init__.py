# Solver package
