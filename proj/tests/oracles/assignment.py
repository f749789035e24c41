"""Reference optimum for a rectangular max-weight assignment, via scipy.

w[i][j] = ((i * 7 + j * 13 + i * j) % 17) / 16 on an 8 x 11 grid.
Run: python3 assignment.py
"""
import numpy as np
from scipy.optimize import linear_sum_assignment

w = np.array([[((i * 7 + j * 13 + i * j) % 17) / 16 for j in range(11)] for i in range(8)])
rows, cols = linear_sum_assignment(w, maximize=True)
print("total:", repr(w[rows, cols].sum()))
print("transposed total:", repr(w.T[linear_sum_assignment(w.T, maximize=True)].sum()))
