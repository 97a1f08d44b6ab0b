from ._cbpir import (
    CbpirError,
    Params,
    attack_complexity,
    attack_modified_run,
    attack_original_run,
    gen_db,
    m_zero,
    query_gen_cost,
    rate_exact,
    rate_table,
    retrieve_local,
    weight_threshold,
)

__all__ = [
    "CbpirError",
    "Params",
    "attack_complexity",
    "attack_modified_run",
    "attack_original_run",
    "gen_db",
    "m_zero",
    "query_gen_cost",
    "rate_exact",
    "rate_table",
    "retrieve_local",
    "weight_threshold",
]
