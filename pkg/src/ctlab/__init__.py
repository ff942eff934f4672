"""Leakage-trace interpreters and constant-time transparency checking.

Two toy languages (a structured while-language and labelled graphs), a
catalogue of decompilation-style passes over them, and checkers that ask
whether a pass can hide or introduce constant-time violations: exhaustive
trace comparison, stepwise simulation certificates, and an injectivity
scan on observation transformers.
"""

from .lang import Const, Observation, Op, Var, format_trace
from .structured import (
    Assign,
    Cmd,
    If,
    Load,
    Nil,
    Seq,
    Store,
    While,
    format_cmd,
    run_struct,
    seq,
    seq_all,
)
from .cfg import BranchNode, CfgProgram, InstrNode, format_cfg, run_cfg
from .inputs import (
    ConcreteInput,
    InputSpec,
    MemoryInit,
    MemoryInput,
    RegisterInput,
    enumerate_inputs,
    public_projection,
    related,
)
from .parsing import ParseError, parse_cfg, parse_expr, parse_spec, parse_structured
from .passes import PASSES, PassError, apply_pass, apply_pipeline, parse_pipeline
from .passes.regions import annotate_regions, structure_cfg
from .ct import (
    BUDGET_LIMITED,
    CT,
    CtVerdict,
    CtWitness,
    DEFAULT_FUEL,
    NOT_CT,
    TransparencyReport,
    check_ct,
    check_transparency,
    semantics_for,
    transparency_between,
)
from .simulation import (
    CertificateBundle,
    InjectivityReport,
    ObsPattern,
    SimulationCertificate,
    SimulationReport,
    build_certificate,
    check_injectivity,
    check_lockstep,
    check_relaxed,
    check_simulation,
)
from .generate import (
    DEFAULT_FEATURES,
    FEATURES,
    generate_programs,
    generate_suite,
    lower_to_cfg,
    random_partitions,
)
from .corpus import ENTRIES, CorpusEntry, derive_matrix, run_entries

__version__ = "0.1.0"
