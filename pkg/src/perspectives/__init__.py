"""Annotator polarization, perspective-aware gold standards and inclusive ensembles."""

__version__ = "0.1.0"

from .agreement import (
    UndefinedAgreement,
    agreement_report,
    chi_square_uniform,
    cohen_kappa,
    fleiss_kappa,
    intra_agreement,
    pairwise_network,
)
from .augment import AugmentPolicy, copy_count, replicate_by_polarization
from .classify import (
    Hyperparams,
    LinearModel,
    PredictionSet,
    fit_tfidf,
    import_predictions,
    predict,
    tokenize,
    train_linear,
)
from .corpus import (
    MISSING,
    AnnotationError,
    AnnotationMatrix,
    Annotator,
    CorpusItem,
    LabelScheme,
    deduplicate,
    keyword_filter,
    keyword_frequencies,
    label_distribution,
    load_annotations,
    load_annotators,
    load_texts,
)
from .evalens import classifier_disagreement, evaluate, inclusive_ensemble
from .goldstd import GoldStandard, SplitSpec, majority_gold, make_split, train_test_split
from .partition import Partition, enumerate_partitions, natural_partition, search_max_polarization
from .pipeline import RunConfig, full_pipeline
from .polarization import average_p_index, p_index, polarization_census, rank_by_polarization
