"""Finite-battery energy-harvesting channel toolkit.

Modules:
    dist      discrete arrival laws and battery clipping
    policies  online power-control policies and their step functions
    sim       trajectory simulation, Monte-Carlo throughput, epoch statistics
    bounds    closed-form bounds, Lambert-W machinery, gap certificates
    smith     amplitude-constrained AWGN capacity and the eta verification
    mdp       discretized average-reward dynamic programming
    cli       command-line entry point (`ehcap`)
"""

__version__ = "0.1.0"
