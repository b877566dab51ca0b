"""
config.py - Parámetros de configuración global del proyecto.

Valores por defecto del esquema de reparto (t, n) basado en el teorema chino
del resto y de las dos vías de ocultación reversible (HDE-ED y DE-IS).
Todos los módulos leen de aquí; la línea de comandos puede sobrescribirlos.
"""

# ============================================================
# REPARTO DE SECRETO (Asmuth-Bloom sobre primos)
# ============================================================
W_BITS = 8               # bits por píxel de la imagen secreta
THRESHOLD = 5            # t: accionistas mínimos para reconstruir
N_SHAREHOLDERS = 7       # n: número total de accionistas
Q0 = 257                 # primo de reconstrucción, 2^w <= q0 <= 2^(w+1)

# Primos de reparto, ascendentes, todos en (2^w, 2^(w+1)) y mayores que q0
PRIME_POOL = (457, 461, 463, 467, 479, 487, 491, 499, 503, 509)

# ============================================================
# OCULTACIÓN REVERSIBLE (expansión de diferencias)
# ============================================================
PIXEL_MAX = 255
H_FID = 10                       # límite de fidelidad por defecto
H_FID_INFINITE = float('inf')    # modo "todos los pares"
H_FID_SATURATION = PIXEL_MAX     # desde aquí h_fid ya no descarta ningún par

# ============================================================
# GENERADORES PSEUDOALEATORIOS
# ============================================================
# Identificador del algoritmo guardado en las cabeceras de fichero:
#   1 = numpy Philox4x64-10 (generador basado en contador)
PRNG_ID = 1

# Etiquetas de flujo: cada uso de la semilla obtiene un flujo independiente
STREAM_KEYS = 1
STREAM_RANDOMNESS = 2
STREAM_KEYSTREAM = 3
STREAM_SCRAMBLE = 4
STREAM_SAMPLING = 5
STREAM_PAYLOAD = 6
STREAM_DEMO = 7

# ============================================================
# MÉTRICAS
# ============================================================
CORRELATION_SAMPLES = 2000       # N_s
CORRELATION_DIRECTIONS = ("horizontal", "vertical", "diagonal")
EC2_REPEATS = 10                 # sesiones de reparto promediadas para EC2
HFID_SWEEP = (0, 1, 2, 3, 5, 10)

METRICS_CSV_HEADER = ("image", "psnr1", "ec1", "ec2", "er_deis",
                      "entropy_before", "entropy_after",
                      "corr_h", "corr_v", "corr_d")
METRICS_DETAIL_CSV_HEADER = ("image", "psnr2", "psnr3", "er1", "bf", "error1", "error2")
HFID_CSV_HEADER = ("image", "hfid", "ec1", "er1", "psnr1")
HISTOGRAM_VALUE_COLUMN = "value"

# ============================================================
# FICHEROS
# ============================================================
FILE_VERSION = 1
MAGIC_SHARE = b"CRDS"
MAGIC_KEY = b"CRKY"
MAGIC_RANDOMNESS = b"CRPR"
MAGIC_SIDE_INFO = b"CRSI"
HFID_INFINITE_CODE = 0xFFFF
MAX_W_BITS = 15          # residuos de 16 bits

SHARE_FILE_PATTERN = "share_{index}.crds"
KEY_FILE_PATTERN = "key_{index}.crky"
RANDOMNESS_FILE = "randomness.crpr"
SIDE_INFO_FILE = "side.crsi"
PARAMS_FILE = "params.json"

# ============================================================
# LÍNEA DE COMANDOS
# ============================================================
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_THRESHOLD = 3
EXIT_FORMAT = 4
EXIT_CONSISTENCY = 5

LOG_FORMAT = "[%(name)s] %(message)s"

# ============================================================
# DEMO (imágenes sintéticas para pruebas sin banco de imágenes)
# ============================================================
DEMO_SIZE = 64
DEMO_KINDS = ("natural", "gradient", "constant", "random")
DEMO_CONSTANT_VALUE = 128
