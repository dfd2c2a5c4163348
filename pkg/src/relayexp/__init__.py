"""Error-exponent bounds for discrete memoryless relay channels."""

__version__ = "0.1.0"

from .prob_core import (CondDist, Dist, OptimizerConfig, cond_entropy,
                        cond_mutual_info, entropy, kl_div_cond,
                        maximize_over_simplex, mutual_info)
from .relay_model import (CfInput, PdfInput, RelayChannelSpec, cf_aux_channels,
                          cutset_bound, pdf_virtual_channels, sato_channel)
from .pdf_exponents import (BlockMarkovConfig, ExponentEval, df_input,
                            optimize_blocks, pdf_dual_exponent, pdf_overall,
                            pdf_primal_exponent)
from .cf_exponents import (CfJointType, CfRates, cf_G1, cf_G2, cf_J,
                           cf_overall, cf_psi1, cf_psi2)
from .haroutunian_upper import (UpperBoundResult, ecs_objective, ecs_upper,
                                ecs_upper_sweep)
from .types_toolkit import (CondTypeN, TypeN, enum_types, type_class_size,
                            verify_joint_typicality, verify_lemma1,
                            vshell_size)
