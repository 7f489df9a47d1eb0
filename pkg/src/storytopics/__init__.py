"""Topic clustering for crowd-sourced smart-home user stories.

Three routes from raw stories to a 2-d map: topic proportions from
collapsed-Gibbs LDA, flattened per-story embedding blocks, and all-pairs
Word Mover's Distance; each is projected with exact t-SNE and scored
against the annotated domains.
"""

from .corpus import (
    ColumnMapping,
    Corpus,
    DomainLabel,
    UserStory,
    domain_histogram,
    load_corpus,
    make_full_text,
)
from .docgeom import (
    EmbeddingFlattener,
    FlatRepresentation,
    StoryMatrix,
    assemble_flat,
    embed_story,
    flatten_corpus,
    load_flat,
    pca_reduce,
    save_flat,
    shortest_length,
)
from .embed import (
    CoverageReport,
    EmbeddingTable,
    SkipgramTrainer,
    coverage_report,
    l2_normalized,
    load_word2vec_binary,
    save_word2vec_binary,
    train_skipgram,
)
from .errors import (
    ConfigError,
    DataError,
    NumericError,
    StageError,
    StorytopicsError,
)
from .evalcluster import (
    AgreementScores,
    ClusterAssignment,
    LloydKMeans,
    Neighbor,
    adjusted_rand_index,
    agreement,
    classical_mds,
    format_neighbor_table,
    kmeans,
    kmeans_best,
    neighbor_report,
    normalized_mutual_info,
    purity,
)
from .lda import GibbsLda, LdaModel, doc_topics, fit_lda, load_lda, save_lda
from .pipeline import (
    EmbeddingConfig,
    LdaConfig,
    RunConfig,
    TsneConfig,
    config_hash,
    load_config,
    run_pipeline,
)
from .plotting import DOMAIN_STYLE, save_svg, scatter_svg
from .project import (
    ExactTsne,
    Projection2D,
    load_coords_csv,
    save_coords_csv,
    save_kl_csv,
    tsne,
)
from .textprep import (
    TEMPLATE_WORDS,
    TokenizedStory,
    Vocabulary,
    build_vocabulary,
    clean_text,
    load_stopwords,
    preprocess_corpus,
    preprocess_story,
    remove_stopwords,
    tokenize,
)
from .vectorize import BowMatrix, TfidfMatrix, bow, export_triplets, tfidf
from .wmd import (
    DistanceMatrix,
    NbowDistribution,
    distance_matrix,
    impute_sentinels,
    load_wmdm,
    nbow,
    nbow_corpus,
    save_wmdm,
    transport_value,
    wmd,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementScores",
    "BowMatrix",
    "ClusterAssignment",
    "ColumnMapping",
    "ConfigError",
    "Corpus",
    "CoverageReport",
    "DOMAIN_STYLE",
    "DataError",
    "DistanceMatrix",
    "DomainLabel",
    "EmbeddingConfig",
    "EmbeddingFlattener",
    "EmbeddingTable",
    "ExactTsne",
    "FlatRepresentation",
    "GibbsLda",
    "LdaConfig",
    "LdaModel",
    "LloydKMeans",
    "Neighbor",
    "NbowDistribution",
    "NumericError",
    "Projection2D",
    "RunConfig",
    "SkipgramTrainer",
    "StageError",
    "StoryMatrix",
    "StorytopicsError",
    "TEMPLATE_WORDS",
    "TfidfMatrix",
    "TokenizedStory",
    "TsneConfig",
    "UserStory",
    "Vocabulary",
    "adjusted_rand_index",
    "agreement",
    "assemble_flat",
    "bow",
    "build_vocabulary",
    "classical_mds",
    "clean_text",
    "config_hash",
    "coverage_report",
    "distance_matrix",
    "doc_topics",
    "domain_histogram",
    "embed_story",
    "export_triplets",
    "fit_lda",
    "flatten_corpus",
    "format_neighbor_table",
    "impute_sentinels",
    "kmeans",
    "kmeans_best",
    "l2_normalized",
    "load_config",
    "load_coords_csv",
    "load_corpus",
    "load_flat",
    "load_lda",
    "load_stopwords",
    "load_wmdm",
    "load_word2vec_binary",
    "make_full_text",
    "nbow",
    "nbow_corpus",
    "neighbor_report",
    "normalized_mutual_info",
    "pca_reduce",
    "preprocess_corpus",
    "preprocess_story",
    "purity",
    "remove_stopwords",
    "run_pipeline",
    "save_coords_csv",
    "save_flat",
    "save_kl_csv",
    "save_lda",
    "save_svg",
    "save_wmdm",
    "save_word2vec_binary",
    "scatter_svg",
    "shortest_length",
    "tfidf",
    "tokenize",
    "tsne",
    "train_skipgram",
    "transport_value",
    "wmd",
]
