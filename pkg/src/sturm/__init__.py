"""Sparse tubal-regularized multilinear regression."""
from .estimator import SturmClassifier, SturmRegressor
from .harness import (CvPlan, CvReport, SynthSpec, generate_synthetic,
                      resize_tensor, run_nested_cv, select_top_features, sparsity)
from .prox import prox_l1, prox_tnn
from .solver import (DataSolveHandle, FitResult, SturmConfig, fit_sturm,
                     objective_value, precompute_data_solve, predict, update_A)
from .spectral import dft_mode3, idft_mode3
from .tensor_core import (LabeledDataset, fro_norm, inner_product, l1_norm,
                          tensorize3, vectorize)
from .tsvd import (TsvdFactors, conj_transpose, identity_tensor, t_product,
                   t_svd, tnn, tubal_rank)

__version__ = "0.1.0"
