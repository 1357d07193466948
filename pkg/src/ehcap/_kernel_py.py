"""Pure-Python mirror of the compiled trajectory kernel.

Kept statement-for-statement in sync with _kernel.pyx (same float operation
order, same defensive clamp) so the two engines produce bit-identical
trajectories. Used when the extension is unavailable or explicitly disabled.
"""

import numpy as np

_EVENT_TOL = 1e-12


def simulate_kernel(kind, a, b, cap, b0, arrivals):
    """Run the battery recursion; returns (powers, batteries, events)."""
    n = len(arrivals)
    powers = np.empty(n, dtype=np.float64)
    batteries = np.empty(n, dtype=np.float64)
    events = np.empty(n, dtype=np.uint8)
    bal = b0
    dec = 1.0
    om = 1.0 - a
    for i in range(n):
        bat = bal + arrivals[i]
        if bat > cap:
            bat = cap
        if kind == 0:
            ev = arrivals[i] >= cap - _EVENT_TOL
        elif kind == 2:
            ev = arrivals[i] >= b
        else:
            ev = bat >= cap - _EVENT_TOL
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
    return powers, batteries, events
