from .records import sanitize_records, append_records_csv
from .seeding import derive_rng, derive_seed

__all__ = ["sanitize_records", "append_records_csv", "derive_rng", "derive_seed"]
