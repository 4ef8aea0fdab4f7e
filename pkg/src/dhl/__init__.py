"""Numerical toolkit for directional harmonic analysis on the torus:
Littlewood-Paley calculus along Lipschitz changes of variable, outer
measures on the upper half-plane, time-frequency tiles, parallelogram
covering lemmas, and directional singular integrals.
"""

from .grid import (Grid1D, Grid2D, SampledField, ScaleLattice,
                   apply_multiplier, estimate_operator_norm,
                   field_from_function, load_field, lp_norm,
                   random_band_limited, save_field)
from .filters import LPFilterPair, calderon_sum, make_filter_pair, project
from .maximal import square_maximal_2d, uncentered_maximal
from .lipschitz import (BetaField, CompactWavelet, LipschitzFunction,
                        average_slope, beta_n, beta_tent_size, beta_weighted,
                        change_of_variable, defect_operator,
                        defect_scaling_sweep, diagonal_square_functions,
                        inverse_cov, lipschitz_from_function)
from .halfplane import (CZDecomposition, Tent, UpperHalfField, cz_decompose,
                        embed, outer_lp, size, superlevel_measure,
                        wave_packet, whitney)
from .tiles import (Tile, bessel_sum, correlation, energy_embedding,
                    make_wave_packet, mass_embedding, profile_library,
                    sigma_measure, split_packet, tile_size)
from .cover import (CoverResult, VParallelogram, overlap_statistics,
                    packing_check, select_cover)
from .directional import (TruncationProfile, curved_hilbert, cww_experiment,
                          directional_hilbert, lp_diag_defect_2d,
                          martingale_stack, n_direction_maximal,
                          q_vertical_maximal, single_scale_average,
                          single_scale_square_function)

__version__ = "0.1.0"
