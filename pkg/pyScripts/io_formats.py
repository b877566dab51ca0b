"""
io_formats.py - Formatos de fichero del repartidor y los accionistas.

Todos los binarios comparten una cabecera de 26 bytes (little-endian):

  magic(4) version(1) role(1) index(2) t(2) n(2) q0(2) w(2) H(4) W(4) prng(1) flags(1)

Cuerpos (fila-mayor):
  CRDS parte:       embedded_count u32, residuos u16
  CRKY clave:       primos (o primo-1 si está etiquetada) u16; role 1 = etiquetada
  CRPR aleatoriedad: r u64
  CRSI lateral:     M_ava empaquetada (MSB primero), semilla u64, h_fid u16
                    (0xFFFF = infinito), payload_length u32

Las imágenes son PGM binario (P5) de 8 bits; se decodifican con OpenCV.
La carga útil se guarda como bytes crudos, bits MSB primero.
"""

import csv
import json
import logging
import math
from pathlib import Path

import cv2
import numpy as np

import config
from crt_core import validate_params
from errors import (BadMagic, HeaderInconsistent, MalformedPgm, TruncatedFile,
                    UnsupportedMaxval, VersionMismatch)
from keying import PublicRandomness, SisKeyMatrix
from sharing_pipeline import ImageShare, ShareRole, SideInfo

log = logging.getLogger("Ficheros")

HEADER_DTYPE = np.dtype([
    ("magic", "S4"), ("version", "u1"), ("role", "u1"), ("index", "<u2"),
    ("t", "<u2"), ("n", "<u2"), ("q0", "<u2"), ("w", "<u2"),
    ("height", "<u4"), ("width", "<u4"), ("prng", "u1"), ("flags", "u1"),
])
HEADER_SIZE = HEADER_DTYPE.itemsize

_ROLE_PRISTINE = 0
_ROLE_LABELED = 1


# --------------------------------------------------------
# Cabecera común
# --------------------------------------------------------
def pack_header(magic, params, shape, role=0, index=0, flags=0):
    if params.w > config.MAX_W_BITS:
        raise HeaderInconsistent(f"w={params.w} > {config.MAX_W_BITS} no soportado")
    header = np.zeros((), dtype=HEADER_DTYPE)
    header["magic"] = magic
    header["version"] = config.FILE_VERSION
    header["role"] = int(role)
    header["index"] = int(index)
    header["t"] = params.t
    header["n"] = params.n
    header["q0"] = params.q0
    header["w"] = params.w
    header["height"], header["width"] = shape
    header["prng"] = config.PRNG_ID
    header["flags"] = int(flags)
    return header.tobytes()


def unpack_header(data, magic):
    """
    Returns:
        (dict de campos, bytes del cuerpo)
    """
    if len(data) < HEADER_SIZE:
        raise TruncatedFile(f"{len(data)} bytes, la cabecera ocupa {HEADER_SIZE}")
    record = np.frombuffer(data[:HEADER_SIZE], dtype=HEADER_DTYPE)[0]
    if bytes(record["magic"]) != magic:
        raise BadMagic(f"magic {bytes(record['magic'])!r}, se esperaba {magic!r}")
    if int(record["version"]) != config.FILE_VERSION:
        raise VersionMismatch(f"versión {int(record['version'])}")
    fields = {name: int(record[name]) for name in HEADER_DTYPE.names if name != "magic"}
    if fields["w"] > config.MAX_W_BITS:
        raise HeaderInconsistent(f"w={fields['w']} > {config.MAX_W_BITS}")
    if fields["prng"] != config.PRNG_ID:
        raise HeaderInconsistent(f"generador {fields['prng']} desconocido")
    return fields, data[HEADER_SIZE:]


def check_header_params(fields, params):
    """HeaderInconsistent si la cabecera no corresponde a params."""
    for name in ("t", "n", "q0", "w"):
        if fields[name] != getattr(params, name):
            raise HeaderInconsistent(
                f"{name}={fields[name]} en cabecera, {getattr(params, name)} esperado")


def _read_body(body, dtype, count, what):
    size = np.dtype(dtype).itemsize * count
    if len(body) < size:
        raise TruncatedFile(f"{what}: {len(body)} bytes de {size}")
    return np.frombuffer(body[:size], dtype=dtype), body[size:]


def _expect_end(rest, what):
    if rest:
        raise HeaderInconsistent(f"{what}: {len(rest)} bytes sobrantes")


def _check_residue_range(values, params, what):
    if values.size and (values.min() < 0 or values.max() >= params.residue_limit):
        raise HeaderInconsistent(
            f"{what}: valores fuera de [0, {params.residue_limit}) para w={params.w}")


# --------------------------------------------------------
# Partes
# --------------------------------------------------------
def encode_share(share, params):
    residues = np.asarray(share.residues, dtype=np.int64)
    _check_residue_range(residues, params, "parte")
    flags = int(share.prior_role) if share.role == ShareRole.DEIS_MARKED else 0
    return (pack_header(config.MAGIC_SHARE, params, share.shape, role=share.role,
                        index=share.shareholder_index, flags=flags)
            + np.array(share.embedded_count, dtype="<u4").tobytes()
            + residues.astype("<u2").tobytes())


def write_share(path, share, params):
    Path(path).write_bytes(encode_share(share, params))
    log.debug("Parte %d escrita en %s", share.shareholder_index, path)


def read_share(path, params=None):
    fields, body = unpack_header(Path(path).read_bytes(), config.MAGIC_SHARE)
    if params is not None:
        check_header_params(fields, params)
    shape = (fields["height"], fields["width"])
    count, body = _read_body(body, "<u4", 1, "parte")
    residues, rest = _read_body(body, "<u2", shape[0] * shape[1], "parte")
    _expect_end(rest, "parte")
    try:
        role = ShareRole(fields["role"])
        prior = ShareRole(fields["flags"]) if role == ShareRole.DEIS_MARKED else None
    except ValueError:
        raise HeaderInconsistent(f"rol {fields['role']}/{fields['flags']} desconocido") from None
    return ImageShare(role=role, shareholder_index=fields["index"],
                      residues=residues.reshape(shape).astype(np.int64),
                      embedded_count=int(count[0]), prior_role=prior)


# --------------------------------------------------------
# Claves
# --------------------------------------------------------
def encode_key(key, params):
    primes = np.asarray(key.primes, dtype=np.int64)
    _check_residue_range(primes, params, "clave")
    role = _ROLE_PRISTINE if key.is_pristine else _ROLE_LABELED
    return (pack_header(config.MAGIC_KEY, params, key.shape, role=role,
                        index=key.shareholder_index)
            + primes.astype("<u2").tobytes())


def write_key(path, key, params):
    Path(path).write_bytes(encode_key(key, params))


def read_key(path, params=None):
    fields, body = unpack_header(Path(path).read_bytes(), config.MAGIC_KEY)
    if params is not None:
        check_header_params(fields, params)
    shape = (fields["height"], fields["width"])
    primes, rest = _read_body(body, "<u2", shape[0] * shape[1], "clave")
    _expect_end(rest, "clave")
    if fields["role"] not in (_ROLE_PRISTINE, _ROLE_LABELED):
        raise HeaderInconsistent(f"rol de clave {fields['role']} desconocido")
    return SisKeyMatrix(fields["index"], primes.reshape(shape).astype(np.int64))


# --------------------------------------------------------
# Aleatoriedad pública
# --------------------------------------------------------
def encode_randomness(randomness, params):
    r = np.asarray(randomness.r, dtype=np.int64)
    if r.size and r.min() < 0:
        raise HeaderInconsistent("aleatorizadores negativos")
    return (pack_header(config.MAGIC_RANDOMNESS, params, randomness.shape)
            + r.astype("<u8").tobytes())


def write_randomness(path, randomness, params):
    Path(path).write_bytes(encode_randomness(randomness, params))


def read_randomness(path, params=None):
    fields, body = unpack_header(Path(path).read_bytes(), config.MAGIC_RANDOMNESS)
    if params is not None:
        check_header_params(fields, params)
    shape = (fields["height"], fields["width"])
    r, rest = _read_body(body, "<u8", shape[0] * shape[1], "aleatoriedad")
    _expect_end(rest, "aleatoriedad")
    return PublicRandomness(r=r.reshape(shape).astype(np.int64))


# --------------------------------------------------------
# Información lateral
# --------------------------------------------------------
def _encode_hfid(h_fid):
    if math.isinf(h_fid):
        return config.HFID_INFINITE_CODE
    h_fid = int(h_fid)
    if not 0 <= h_fid < config.HFID_INFINITE_CODE:
        raise HeaderInconsistent(f"h_fid={h_fid} no representable")
    return h_fid


def _decode_hfid(code):
    return config.H_FID_INFINITE if code == config.HFID_INFINITE_CODE else code


def encode_side_info(side, params):
    m_ava = np.asarray(side.m_ava, dtype=np.uint8)
    if np.any(m_ava > 1):
        raise HeaderInconsistent("M_ava no binaria")
    return (pack_header(config.MAGIC_SIDE_INFO, params, m_ava.shape)
            + np.packbits(m_ava.reshape(-1), bitorder="big").tobytes()
            + np.array(side.scramble_seed & 0xFFFFFFFFFFFFFFFF, dtype="<u8").tobytes()
            + np.array(_encode_hfid(side.h_fid), dtype="<u2").tobytes()
            + np.array(side.payload_length, dtype="<u4").tobytes())


def write_side_info(path, side, params):
    Path(path).write_bytes(encode_side_info(side, params))


def read_side_info(path, params=None):
    fields, body = unpack_header(Path(path).read_bytes(), config.MAGIC_SIDE_INFO)
    if params is not None:
        check_header_params(fields, params)
    shape = (fields["height"], fields["width"])
    size = shape[0] * shape[1]
    packed, body = _read_body(body, np.uint8, -(-size // 8), "lateral")
    seed, body = _read_body(body, "<u8", 1, "lateral")
    h_fid, body = _read_body(body, "<u2", 1, "lateral")
    length, rest = _read_body(body, "<u4", 1, "lateral")
    _expect_end(rest, "lateral")
    m_ava = np.unpackbits(packed, count=size, bitorder="big").reshape(shape)
    return SideInfo(m_ava=m_ava, scramble_seed=int(seed[0]),
                    h_fid=_decode_hfid(int(h_fid[0])), payload_length=int(length[0]))


# --------------------------------------------------------
# Imágenes PGM
# --------------------------------------------------------
def _check_pgm_header(data):
    """
    Solo clasifica errores: el decodificado es cosa de OpenCV. Exige P5,
    maxval 255 y bytes suficientes para los píxeles.
    """
    if not data.startswith(b"P5"):
        raise MalformedPgm("no es un PGM binario (P5)")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise MalformedPgm("cabecera PGM incompleta")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise MalformedPgm(f"campo de cabecera no numérico: {token!r}")
        tokens.append(int(token))
    width, height, maxval = tokens
    if maxval != config.PIXEL_MAX:
        raise UnsupportedMaxval(f"maxval {maxval}, solo se admite {config.PIXEL_MAX}")
    if len(data) - (pos + 1) < width * height:
        raise MalformedPgm(f"{len(data) - pos - 1} bytes de píxeles, se esperaban "
                           f"{width * height}")


def read_pgm(path):
    data = Path(path).read_bytes()
    _check_pgm_header(data)
    img = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if img is None or img.ndim != 2:
        raise MalformedPgm(f"OpenCV no pudo decodificar {path}")
    if img.dtype != np.uint8:
        raise UnsupportedMaxval(f"{path}: muestras {img.dtype}, solo se admiten 8 bits")
    return img


def encode_pgm(img):
    img = np.asarray(img)
    if img.ndim != 2 or (img.size and (img.min() < 0 or img.max() > config.PIXEL_MAX)):
        raise MalformedPgm("se esperaba una matriz 2D de 8 bits")
    ok, encoded = cv2.imencode(".pgm", img.astype(np.uint8),
                               [cv2.IMWRITE_PXM_BINARY, 1])
    if not ok:
        raise MalformedPgm("OpenCV no pudo codificar la imagen")
    return encoded.tobytes()


def write_pgm(path, img):
    Path(path).write_bytes(encode_pgm(img))


# --------------------------------------------------------
# Carga útil, parámetros y CSV
# --------------------------------------------------------
def read_payload(path, bit_count=None):
    """Bits de un fichero crudo, MSB primero en cada byte."""
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="big")
    return bits if bit_count is None else bits[:bit_count]


def encode_payload(bits):
    """Empaqueta bits MSB primero; el último byte se completa con ceros."""
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    return np.packbits(bits, bitorder="big").tobytes()


def write_payload(path, bits):
    Path(path).write_bytes(encode_payload(bits))


def encode_params(params):
    return (json.dumps(params.to_dict(), indent=2) + "\n").encode()


def write_params(path, params):
    Path(path).write_bytes(encode_params(params))


def read_params(path):
    try:
        data = json.loads(Path(path).read_text())
        return validate_params(w=data["w"], t=data["t"], n=data["n"],
                               q0=data["q0"], pool=data["pool"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise HeaderInconsistent(f"{path}: parámetros ilegibles ({exc})") from None


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def write_outputs(outputs):
    """
    Escribe {ruta: bytes} ya codificados. Los comandos codifican todo antes
    de llamar aquí, así un error de formato no deja ficheros a medias.
    """
    for path in outputs:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    for path, data in outputs.items():
        Path(path).write_bytes(data)
        log.debug("%d bytes escritos en %s", len(data), path)
