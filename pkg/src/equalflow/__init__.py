"""Exact feasibility for same-route integer equal-flow problems."""

from .model import (ArcIndex, Certificate, EqualFlowClass, Objective, ProblemInstance,
                    VarBounds, Witness, class_of, validate_instance, validate_witness)

__all__ = ["ArcIndex", "Certificate", "EqualFlowClass", "Objective", "ProblemInstance",
           "VarBounds", "Witness", "class_of", "validate_instance", "validate_witness"]
