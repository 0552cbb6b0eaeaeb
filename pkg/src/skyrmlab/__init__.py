"""Digital twin of a reconfigurable photonic circuit producing hybrid
polarization-spatial entangled photon pairs with tunable skyrmionic topology,
plus the tomography, Bell-test and topology measurement stack."""

from .circuit import (HybridStateSpec, NoiseChannel, apply_noise, balance_hwp1,
                      gate_T, hwp_jones, hybrid_ket, ideal_hybrid_density,
                      ideal_hybrid_ket, make_hybrid_density, postselect_smf,
                      qwp_jones)
from .measurement import (CountTable, ProjectionSetting, chsh_from_counts,
                          chsh_s, coherence_length, coincidence_curve,
                          joint_probability, visibility)
from .qmath import gellmann_basis, hermitian_eig, psd_sqrt, tensor_product
from .source import (LGMode, OAMSpectrum, build_input_state, lg_amplitude,
                     spdc_spectrum)
from .tomography import (ReconstructionResult, concurrence, extract_relative_phase,
                         fidelity, linear_entropy, mle_reconstruct, purity,
                         simulate_tomography)
from .topology import (GridSpec, StokesField, TopologyReport, basis_rotation,
                       predict_topology, skyrmion_number, stokes_field,
                       stokes_phases)

__version__ = "0.1.0"
