"""
errors.py - Jerarquía de errores del proyecto.

Cada familia lleva el código de salida que devuelve la línea de comandos.
"""

import config


class SisError(Exception):
    """Base de todos los errores del esquema."""
    exit_code = 1


# --------------------------------------------------------
# Parámetros y valores fuera de rango
# --------------------------------------------------------
class ParameterError(SisError):
    exit_code = config.EXIT_USAGE


class NotPrime(ParameterError):
    pass


class PoolOutOfRange(ParameterError):
    pass


class ThresholdConditionViolated(ParameterError):
    pass


class PoolTooSmall(ParameterError):
    pass


class SubsetConditionViolated(ParameterError):
    pass


class ValueOutOfRange(ParameterError):
    pass


class RandomizerOutOfRange(ParameterError):
    pass


class DuplicateModulus(ParameterError):
    pass


class ModulusMismatch(ParameterError):
    pass


class OddWidth(ParameterError):
    pass


class NotAvailable(ParameterError):
    pass


class OverflowedPair(ParameterError):
    pass


class ResidueOutOfRange(ParameterError):
    pass


class PayloadTooLarge(ParameterError):
    pass


# --------------------------------------------------------
# Umbral
# --------------------------------------------------------
class ThresholdError(SisError):
    exit_code = config.EXIT_THRESHOLD


class InsufficientShares(ThresholdError):
    pass


# --------------------------------------------------------
# Formato de ficheros
# --------------------------------------------------------
class FormatError(SisError):
    exit_code = config.EXIT_FORMAT


class BadMagic(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class HeaderInconsistent(FormatError):
    pass


class MalformedPgm(FormatError):
    pass


class UnsupportedMaxval(FormatError):
    pass


# --------------------------------------------------------
# Consistencia entre partes
# --------------------------------------------------------
class ConsistencyError(SisError):
    exit_code = config.EXIT_CONSISTENCY


class InconsistentShares(ConsistencyError):
    pass


class MixedRoles(ConsistencyError):
    pass


class RoleMismatch(ConsistencyError):
    pass


class DimensionMismatch(ConsistencyError):
    pass


class SideInfoMismatch(ConsistencyError):
    pass


class KeyNotPristine(ConsistencyError):
    pass


class LabeledKey(ConsistencyError):
    pass


class DegenerateVarianceWarning(UserWarning):
    """Varianza nula al calcular una correlación: el coeficiente se fija en 0."""
