#!/usr/bin/env python3
"""Render a figure from an ehcap CSV artifact: plot.py --spec spec.json"""

import sys

from ehcap_plots.render import main

if __name__ == "__main__":
    sys.exit(main())
