# Packed per-axis parameter layout shared by the compiled kernel and the
# pure-Python fallback. One axis = one measured basis w; "key" is source w2,
# "test" is source w1, and the theta entries refer to the key of the other basis.
N_LINES = 0
C0 = 1
SL0 = 2
C1 = 3
SL1 = 4
N1_KEY = 5
N1_TEST = 6
N0_TEST = 7
TBAR = 8
A0_TEST = 9
A1_TEST = 10
PREF_KEY = 11
N_THETA_TEST = 12
N_THETA_KEY = 13
LN_HALF_EPS = 14
EPS = 15
LOG_SCALE = 16
SIZE = 17

E_FLOOR = 1e-12
E_CAP = 0.5
