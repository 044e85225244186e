"""Polar codes for the two-user discrete memoryless broadcast channel."""

from .construction import (ChainingLayout, ConstructionParams, Design, IndexSetReport,
                           InfeasibleRatesError, build_binning_layout, build_index_sets,
                           build_marton_layout, build_superposition_layout, design_reports,
                           estimate_Z, exact_Z, layout_from_reports, p2p_reports)
from .polar import PolarTransform, SCContext, generator_matrix, polar_transform, sc_posterior
from .probability import (DMC, AuxiliaryModel, BinaryInputDMC, BroadcastSetup, JointPMF,
                          PairwiseJoint, RatePoint, bec, binary_entropy, bsc,
                          bsc_superposition_model, check_stochastic_degradation,
                          effective_channel, information_measure, product_model)
from .regions import (RegionPolytope, SweepResult, binning_region, corner_points,
                      marton_mgp_region, region_sweep, superposition_region)
from .schemes import (BinningCode, ChainOrderError, MartonCode, P2PCode, SharedRandomness,
                      SuperpositionCode, TransmissionTrace, binning_decode_chain,
                      binning_encode_chain, compress, decompress, make_code,
                      marton_decode_chain, marton_encode_chain, p2p_decode, p2p_encode,
                      superposition_decode_chain, superposition_encode_chain)

__version__ = "0.1.0"
