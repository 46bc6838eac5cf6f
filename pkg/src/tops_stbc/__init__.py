"""Time-orthogonal pulse shaping for group-decodable linear STBCs."""

__version__ = "0.1.0"

from .constellation import Constellation, bpsk, by_name, pam, psk, qam
from .core import (CSRPartition, Group, IntraGroupStructure, LinearSTBC, SupportSet,
                   assemble_codeword, codebook, coarsen, coding_gain, csr_partition,
                   diversity_rank, group_codeword, intra_group_structure,
                   pulse_assignable_partition, quasi_orthogonal_pair,
                   shared_pulse_partition, single_group_partition, support_set,
                   tops_partition)
from .catalog import catalog_names, get_code
from .decoders import (STRATEGIES, DecodeResult, complexity_audit, decode_batch,
                       group_ml, iq_separated_ml, joint_ml, qr_hardlimit_ml, subgroup_ml)
from .pulses import PulseFamily, build_pulse_family, hermite_waveform
from .waveform import discrete_shortcut, draw_channel, matched_filter_bank, transmit
