"""PE phenotyping pipeline for CTPA radiology reports.

Identifies CTPA studies in a free-text radiology corpus, isolates
PE evidence sentences, classifies each report PE-positive/negative through a
pluggable classifier, compares against discharge diagnosis codes and
adjudicated gold labels, and hosts the dual-blinded labeling workflow that
produces those gold labels.
"""

from .corpus import (
    BinaryLabel,
    FineLabel,
    IcdCodeRecord,
    IcdCorpus,
    IcdVersion,
    PhenotypeLabel,
    Prediction,
    PredictionSource,
    RadiologyReport,
    ReportCorpus,
    collapse_label,
    load_icd,
    load_icd_file,
    load_reports,
    load_reports_file,
    normalize_code,
)
from .sections import Section, SectionKind, SectionMap, segment
from .matching import match_term
from .terms import TermTable, load_terms
from .identifier import IdentificationDecision, IdentifierMode, Route, identify
from .extractor import (
    ExtractedEvidence,
    mask_exclusions,
    split_sentences,
    extract,
)
from .classifier import (
    AdapterRequest,
    AdapterResponse,
    BaselineClassifier,
    HttpAdapter,
    PipeAdapter,
    baseline_classify,
    classify_report,
    external_classify,
)
from .icd import (
    StayComparisonRow,
    build_comparison,
    is_pe_code,
    select_report_per_stay,
    stay_icd_label,
)
from .metrics import (
    CiMethod,
    ConfusionCounts,
    MetricsReport,
    confusion,
    metrics,
    proportion_ci,
    summarize,
)
from .synth import GeneratorSpec, PlantedClass, generate

__version__ = "0.1.0"
