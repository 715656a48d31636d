"""Repairs of inconsistent single-relation tables under functional dependencies.

Public surface: the dependency algebra (:mod:`fdrepair.fds`), the table
model (:mod:`fdrepair.table`), subset- and update-repair engines
(:mod:`fdrepair.srepair`, :mod:`fdrepair.urepair`), the most-probable-
database solver (:mod:`fdrepair.mpd`), and instance generators
(:mod:`fdrepair.gadgets`).
"""

__version__ = "0.1.0"

from .errors import (
    CapExceeded,
    FdParseError,
    IntractableFdSet,
    RepairError,
    SchemaMismatchError,
    TableFormatError,
)
from .fds import (
    ClassifierTrace,
    Fd,
    FdSet,
    detect_simplification,
    fd,
    fds_to_text,
    metrics,
    min_lhs_cover,
    parse_fds,
    ratio_bounds,
)
from .gadgets import (
    Graph,
    RandomInstanceParams,
    gen_delta_k,
    gen_delta_prime_k,
    gen_random_instance,
    gen_vertex_cover_gadget,
)
from .mpd import MpdResult, ProbabilisticTable, brute_mpd, mpd_solve
from .srepair import SRepairReport, approx_s_repair, brute_s_repair, opt_s_repair, osr_succeeds
from .table import (
    SubsetRepair,
    Table,
    UpdateRepair,
    conflict_graph,
    dist_sub,
    dist_upd,
    load_table,
    satisfies,
    table_to_csv,
)
from .urepair import (
    URepairReport,
    brute_u_repair,
    decompose,
    repair_u,
    strip_consensus,
    subset_to_update,
    update_to_subset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
