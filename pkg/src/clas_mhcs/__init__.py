"""Certificateless aggregate signatures and anonymous batch verification
for mobile healthcare crowd sensing."""

from .clas import (
    AggregateSignature,
    AuthorityKeyPair,
    ClasSignature,
    KeyGenerationCenter,
    ParticipantKeys,
    aggregate,
    aggregate_verify,
    setup,
    sign,
    verify,
)
from .group import BilinearSuite, get_suite
from .opcount import OperationCounter
from .protocol import (
    BatchReport,
    DataCenter,
    ManagementServer,
    Participant,
    Submission,
    TimeSlot,
    close_slot_and_batch_verify,
    dc_open,
    mhcs_sign,
    ms_init,
    ms_trace,
    verify_single,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateSignature", "AuthorityKeyPair", "ClasSignature", "KeyGenerationCenter",
    "ParticipantKeys", "aggregate", "aggregate_verify", "setup", "sign", "verify",
    "BilinearSuite", "get_suite", "OperationCounter",
    "BatchReport", "DataCenter", "ManagementServer", "Participant", "Submission", "TimeSlot",
    "close_slot_and_batch_verify", "dc_open", "mhcs_sign", "ms_init", "ms_trace", "verify_single",
]
