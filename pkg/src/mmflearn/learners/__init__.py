from .deterministic import BinarySearchState, GridState, grid_point, rprime_det, rprime_det_sp
from .glm import GlmInterval, GlmLearner, GlmState, glm_interval, kappa_for, rprime_glm
from .tree import TreeLearner, TreeState, rprime_tree
