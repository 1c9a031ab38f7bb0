"""Risk/utility scoring of synthetic microdata against its original source,
with sample-fraction equivalence reporting.

The package compares a synthetic dataset to the table it was generated from
on two axes: attribution-disclosure risk (targeted correct-attribution
probability, rescaled against a guess-from-marginals baseline) and analytical
utility (tabulation ratio-of-counts plus regression confidence-interval
overlap).  Subsampling the original at a grid of fractions and scoring the
samples with the identical pipeline yields a reference curve; a synthetic
dataset's scores are then bracketed on that curve to report the sample
fraction with equivalent utility and equivalent risk.
"""

from .binning import BinRule
from .config import EvaluationConfig, load_config
from .data_model import (
    MISSING,
    MicroTable,
    Schema,
    VariableSpec,
    column_proportions,
    infer_schema,
    load_csv,
    read_schema,
    write_csv,
    write_schema,
)
from .equivalence import (
    EquivalenceResult,
    FractionInterval,
    equivalence,
    locate_on_curve,
)
from .fixture import PopulationSpec, cramers_v, generate_population, mean_cramers_v
from .pipeline import Evaluator, score_tables
from .risk import (
    AttackConfig,
    RiskScore,
    TcapResult,
    baseline_cap,
    marginal_tcap,
    overall_risk,
    tcap_raw,
    weap_table,
)
from .sampling import (
    DEFAULT_FRACTIONS,
    FractionGrid,
    ReplicatePlan,
    RUCurve,
    build_curve,
    draw_sample,
    replicate_seeds,
)
from .synth import (
    CartParams,
    cart_draw,
    cart_fit,
    load_external_synth,
    synth_cart,
    synth_independent,
    visit_sequence,
)
from .utility import (
    ConfidenceInterval,
    FitResult,
    RegressionSpec,
    UtilityScore,
    ci_overlap,
    cio_score,
    combine_utility,
    fit_logistic,
    overall_utility,
    roc_bivariate,
    roc_cell,
    roc_univariate,
)

__version__ = "0.1.0"
