"""
skewrank - rank aggregation by skew-symmetric matrix completion

Turns sparse voter-by-item ratings into a global item ranking:
- Pairwise aggregation of ratings (five rules)
- Low-rank completion of the comparison matrix by singular value projection
- Score extraction, ranking and recoverability diagnostics
- Synthetic recovery and item-response studies

Usage:
    python app.py rank --demo
    python app.py rank --input ratings.csv --method am --min-support 30 --output-dir out
"""

import os
import sys

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from skewrank.cli import main



if __name__ == "__main__":
    sys.exit(main())
