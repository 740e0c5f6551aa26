#!/usr/bin/env python
"""
.. module:: NetBurst
   :synopsis: Main module

NetBurst, event-centric forecasting of bursty network telemetry
"""
import sys
import warnings

import netburst.io_nb as io_nb
from netburst.run import run


def main():
    # Default action when facing a warning is being remapped to a custom one
    warnings.showwarning = io_nb.warning_message
    return run()


# -----------------MAIN-CALL---------------------------------------------
if __name__ == '__main__':
    sys.exit(main())
