"""Online clustering of timestamped documents with the powered Dirichlet-Hawkes prior."""
from .corpus import Document
from .datagen import GenerationSpec, LabeledCorpus, generate_corpus
from .evaluation import MetricsReport, SweepGrid, nmi, run_sweep, score
from .inference import ClusteringResult, FitConfig, fit
from .point_process import KernelBasis
from .prior import PriorParams, log_pdhp_prior, pdhp_prior, pdp_prior

__version__ = "0.1.0"
