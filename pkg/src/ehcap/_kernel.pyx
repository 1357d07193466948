# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernel for the battery recursion.

Statement-for-statement identical to the pure-Python mirror in _kernel_py.py
so both engines produce bit-identical trajectories. Kind codes:
0 bernoulli_exp(a=p), 1 generalized_bernoulli(a=q),
2 binary_quantization(a=q_prime, b=threshold_x), 3 fixed_fraction(a=q),
4 greedy, 5 constant(a=level).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF EVENT_TOL = 1e-12


cdef void _run(int kind, double a, double b, double cap, double b0,
               const double[::1] arrivals, double[::1] powers,
               double[::1] batteries, unsigned char[::1] events) noexcept nogil:
    cdef Py_ssize_t i, n = arrivals.shape[0]
    cdef double bal = b0
    cdef double dec = 1.0
    cdef double om = 1.0 - a
    cdef double bat, g
    cdef bint ev
    for i in range(n):
        bat = bal + arrivals[i]
        if bat > cap:
            bat = cap
        if kind == 0:
            ev = arrivals[i] >= cap - EVENT_TOL
        elif kind == 2:
            ev = arrivals[i] >= b
        else:
            ev = bat >= cap - EVENT_TOL
        if kind <= 2:
            if ev:
                dec = 1.0
            else:
                dec = dec * om
            if kind == 2:
                g = b * a * dec
            else:
                g = cap * a * dec
        elif kind == 3:
            g = a * bat
        elif kind == 4:
            g = bat
        else:
            g = a
        if g > bat:
            g = bat
        powers[i] = g
        batteries[i] = bat
        events[i] = ev
        bal = bat - g


def simulate_kernel(int kind, double a, double b, double cap, double b0,
                    cnp.ndarray[double, ndim=1] arrivals):
    """Run the battery recursion; returns (powers, batteries, events)."""
    cdef Py_ssize_t n = arrivals.shape[0]
    powers = np.empty(n, dtype=np.float64)
    batteries = np.empty(n, dtype=np.float64)
    events = np.empty(n, dtype=np.uint8)
    cdef double[::1] pw = powers
    cdef double[::1] bt = batteries
    cdef unsigned char[::1] evs = events
    cdef const double[::1] arr = np.ascontiguousarray(arrivals)
    with nogil:
        _run(kind, a, b, cap, b0, arr, pw, bt, evs)
    return powers, batteries, events
