"""Built-in demo ratings for trying the pipeline without a data file."""

from .aggregation import RatingsMatrix

# (voter_id, item_id, stars); u09 has a single rating and is dropped by --min-user-ratings 2
DEMO_RATINGS = [
    ("u01", "Casablanca", 5), ("u01", "Vertigo", 4), ("u01", "Rashomon", 4),
    ("u01", "Metropolis", 3), ("u01", "Nosferatu", 2), ("u01", "Plan 9", 1),
    ("u02", "Casablanca", 5), ("u02", "Vertigo", 5), ("u02", "Metropolis", 3),
    ("u02", "Plan 9", 1),
    ("u03", "Casablanca", 4), ("u03", "Rashomon", 3), ("u03", "Nosferatu", 2),
    ("u03", "Plan 9", 1),
    ("u04", "Casablanca", 5), ("u04", "Vertigo", 4), ("u04", "Rashomon", 3),
    ("u04", "Metropolis", 3), ("u04", "Plan 9", 2),
    ("u05", "Casablanca", 4), ("u05", "Vertigo", 3), ("u05", "Nosferatu", 2),
    ("u05", "Plan 9", 1),
    ("u06", "Casablanca", 5), ("u06", "Rashomon", 4), ("u06", "Metropolis", 2),
    ("u06", "Nosferatu", 2), ("u06", "Plan 9", 1),
    ("u07", "Casablanca", 3), ("u07", "Vertigo", 3), ("u07", "Rashomon", 2),
    ("u07", "Plan 9", 1),
    ("u08", "Casablanca", 5), ("u08", "Vertigo", 4), ("u08", "Metropolis", 4),
    ("u08", "Nosferatu", 3), ("u08", "Plan 9", 2),
    ("u09", "Metropolis", 5),
]


def get_demo_ratings() -> RatingsMatrix:
    """Demo ratings as a RatingsMatrix with the original string IDs."""
    voter_ids = list(dict.fromkeys(v for v, _, _ in DEMO_RATINGS))
    item_ids = list(dict.fromkeys(i for _, i, _ in DEMO_RATINGS))
    voter_index = {v: k for k, v in enumerate(voter_ids)}
    item_index = {i: k for k, i in enumerate(item_ids)}
    return RatingsMatrix.from_triplets(
        [voter_index[v] for v, _, _ in DEMO_RATINGS],
        [item_index[i] for _, i, _ in DEMO_RATINGS],
        [float(r) for _, _, r in DEMO_RATINGS],
        voter_ids=voter_ids,
        item_ids=item_ids,
    )


def is_demo_input(path: str) -> bool:
    """Treat the literal input name 'demo' as a request for the demo ratings."""
    return path.strip().lower() == "demo"
