"""
BOSQUE - Advección AMR sobre un bosque de quadtrees
Uso: python main.py [opciones]   (python main.py --help)
"""

import sys

from cli.principal import main

if __name__ == "__main__":
    sys.exit(main())
