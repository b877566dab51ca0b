"""
metrics.py - Medidas de calidad y seguridad.

  - PSNR entre imágenes (o entre matrices de residuos con pico 2^(w+1)-1).
  - Coeficiente de correlación entre elementos adyacentes, muestreado.
  - Entropía media de información (base 2).
  - Capacidad y tasa de inserción, factor de expansión.
  - Histograma de residuos y tasa de error de extracción.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

import config
from errors import DegenerateVarianceWarning, DimensionMismatch, ValueOutOfRange
from keying import stream_generator

log = logging.getLogger("Métricas")

# Desplazamiento (dy, dx) del vecino en cada dirección
_DIRECTION_OFFSETS = {
    "horizontal": (0, 1),
    "vertical": (1, 0),
    "diagonal": (1, 1),
}


def psnr(a, b, peak=config.PIXEL_MAX):
    """PSNR en dB; inf si las matrices son idénticas."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} frente a {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def residue_peak(w=config.W_BITS):
    """Mayor símbolo posible de un residuo: 2^(w+1) - 1."""
    return (1 << (w + 1)) - 1


def pearson_coefficient(u, v):
    """
    Correlación con varianzas poblacionales (1/N). Si alguna varianza es
    nula devuelve 0 y emite DegenerateVarianceWarning.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    du = u - u.mean()
    dv = v - v.mean()
    var_u = float(np.mean(du * du))
    var_v = float(np.mean(dv * dv))
    if var_u == 0.0 or var_v == 0.0:
        warnings.warn("varianza nula en la correlación", DegenerateVarianceWarning,
                      stacklevel=2)
        log.warning("Correlación con varianza nula: se toma 0")
        return 0.0
    r = float(np.mean(du * dv)) / math.sqrt(var_u * var_v)
    return max(-1.0, min(1.0, r))


def sample_adjacent_pairs(matrix, direction, n_samples=config.CORRELATION_SAMPLES,
                          seed=0):
    """
    N_s pares (elemento, vecino) elegidos uniformemente con reemplazo.

    Returns:
        (u, v) arrays de longitud n_samples
    """
    if direction not in _DIRECTION_OFFSETS:
        raise ValueError(f"dirección desconocida: {direction}")
    if n_samples < 2:
        raise ValueOutOfRange(f"N_s={n_samples} < 2")
    matrix = np.asarray(matrix)
    dy, dx = _DIRECTION_OFFSETS[direction]
    height, width = matrix.shape
    if height <= dy or width <= dx:
        raise DimensionMismatch(f"matriz {matrix.shape} demasiado pequeña")

    rng = stream_generator(seed, config.STREAM_SAMPLING)
    ys = rng.integers(0, height - dy, size=n_samples)
    xs = rng.integers(0, width - dx, size=n_samples)
    return matrix[ys, xs], matrix[ys + dy, xs + dx]


def adjacent_correlation(matrix, direction, n_samples=config.CORRELATION_SAMPLES,
                         seed=0):
    """Coeficiente de correlación de N_s pares adyacentes en una dirección."""
    u, v = sample_adjacent_pairs(matrix, direction, n_samples, seed)
    return pearson_coefficient(u, v)


def correlations(matrix, n_samples=config.CORRELATION_SAMPLES, seed=0):
    """Diccionario dirección -> coeficiente para las tres direcciones."""
    return {d: adjacent_correlation(matrix, d, n_samples, seed)
            for d in config.CORRELATION_DIRECTIONS}


def entropy(matrix):
    """Entropía empírica en bits por símbolo."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        raise ValueOutOfRange("matriz vacía")
    _, counts = np.unique(matrix, return_counts=True)
    p = counts / matrix.size
    value = float(-np.sum(p * np.log2(p)))
    return value if value > 0.0 else 0.0


def residue_histogram(matrix, w=config.W_BITS):
    """Ocurrencias de cada símbolo 0..2^(w+1)-1 en una matriz de residuos."""
    values = np.asarray(matrix, dtype=np.int64).reshape(-1)
    size = residue_peak(w) + 1
    if values.size and (values.min() < 0 or values.max() >= size):
        raise ValueOutOfRange(f"residuos fuera de [0, {size}) para w={w}")
    return np.bincount(values, minlength=size)


def bit_error_rate(expected, extracted):
    """
    Fracción de bits erróneos. Los bits que faltan o sobran cuentan como
    errores; dos secuencias vacías dan 0.
    """
    expected = np.asarray(expected, dtype=np.uint8).reshape(-1)
    extracted = np.asarray(extracted, dtype=np.uint8).reshape(-1)
    common = min(expected.size, extracted.size)
    total = max(expected.size, extracted.size)
    if total == 0:
        return 0.0
    errors = np.count_nonzero(expected[:common] != extracted[:common]) + total - common
    return errors / total


def embedding_rates(ec2_total, n, height, width, w=config.W_BITS):
    """
    Returns:
        (EC por parte, ER en bits por bit de parte, factor de expansión)
    """
    ec = ec2_total / n
    er = ec / (height * width * (w + 1))
    return ec, er, blowup_factor(w)


def hde_embedding_rate(ec1, height, width):
    """ER de HDE-ED en bits por píxel."""
    return ec1 / (height * width)


def blowup_factor(w=config.W_BITS):
    return (w + 1) / w


@dataclass
class MetricsReport:
    """Fila de resultados de un experimento sobre una imagen."""
    image: str
    psnr1: float
    ec1: int
    ec2: float
    er_deis: float
    entropy_before: float
    entropy_after: float
    correlations_before: dict = field(default_factory=dict)
    correlations_after: dict = field(default_factory=dict)
    psnr2: float = math.inf
    psnr3: float = math.inf
    er1: float = 0.0
    bf: float = field(default_factory=blowup_factor)
    error1: float = 0.0
    error2: float = 0.0

    def to_row(self):
        """Valores en el orden de config.METRICS_CSV_HEADER."""
        corr = self.correlations_after
        return (self.image, _fmt(self.psnr1), self.ec1, _fmt(self.ec2),
                _fmt(self.er_deis), _fmt(self.entropy_before),
                _fmt(self.entropy_after), _fmt(corr.get("horizontal", 0.0)),
                _fmt(corr.get("vertical", 0.0)), _fmt(corr.get("diagonal", 0.0)))

    def to_detail_row(self):
        """Valores en el orden de config.METRICS_DETAIL_CSV_HEADER."""
        return (self.image, _fmt(self.psnr2), _fmt(self.psnr3), _fmt(self.er1),
                _fmt(self.bf), _fmt(self.error1), _fmt(self.error2))


def _fmt(value):
    if math.isinf(value):
        return "inf"
    return f"{value:.6f}"
