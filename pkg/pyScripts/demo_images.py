"""
demo_images.py - Imágenes sintéticas para pruebas sin banco de imágenes.

Sustituyen a las imágenes de prueba estándar (512x512 en escala de grises)
cuando no están disponibles. Todas son deterministas dada la semilla:

  - natural:  fondo suave (ruido de baja frecuencia interpolado) con formas
              difuminadas y algo de grano; los vecinos se parecen, como en
              una fotografía.
  - gradient: rampa diagonal.
  - constant: valor fijo (config.DEMO_CONSTANT_VALUE); capacidad máxima.
  - random:   ruido uniforme; casi ningún par es disponible con h_fid bajo.
"""

import cv2
import numpy as np

import config
from keying import stream_generator


class DemoImageGenerator:
    """Generador de imágenes de 8 bits de tamaño fijo."""

    def __init__(self, height=None, width=None, seed=0):
        self.height = height or config.DEMO_SIZE
        self.width = width or config.DEMO_SIZE
        self.seed = seed

    def _rng(self, kind):
        # Un flujo distinto por tipo para que no dependan entre sí
        return stream_generator(self.seed * len(config.DEMO_KINDS)
                                + config.DEMO_KINDS.index(kind), config.STREAM_DEMO)

    def natural(self):
        rng = self._rng("natural")
        coarse = rng.uniform(40, 215, size=(max(2, self.height // 16),
                                             max(2, self.width // 16)))
        img = cv2.resize(coarse, (self.width, self.height),
                         interpolation=cv2.INTER_CUBIC)

        # Formas con bordes suaves
        shapes = np.zeros_like(img)
        for _ in range(4):
            center = (int(rng.integers(0, self.width)), int(rng.integers(0, self.height)))
            radius = int(rng.integers(2, max(3, min(self.height, self.width) // 4)))
            cv2.circle(shapes, center, radius, float(rng.uniform(-40, 40)), -1)
        shapes = cv2.GaussianBlur(shapes, (0, 0), sigmaX=1.5)

        grain = rng.normal(0.0, 1.5, size=img.shape)
        return np.clip(np.rint(img + shapes + grain), 0, 255).astype(np.uint8)

    def gradient(self):
        ys, xs = np.mgrid[0:self.height, 0:self.width]
        span = max(1, self.height + self.width - 2)
        return np.rint((ys + xs) * 255.0 / span).astype(np.uint8)

    def constant(self):
        return np.full((self.height, self.width), config.DEMO_CONSTANT_VALUE,
                       dtype=np.uint8)

    def random(self):
        rng = self._rng("random")
        return rng.integers(0, 256, size=(self.height, self.width), dtype=np.uint8)

    def generate(self, kind):
        """Imagen del tipo pedido (uno de config.DEMO_KINDS)."""
        if kind not in config.DEMO_KINDS:
            raise ValueError(f"tipo de imagen desconocido: {kind}")
        return getattr(self, kind)()
