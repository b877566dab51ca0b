"""
experiments.py - Escenarios completos sobre una imagen.

Cada sesión de reparto usa una semilla propia de la que salen, por flujos
independientes, las claves, R, el desordenado, la carga útil y la clave de
ocultación.

  - run_image_experiment: fila de métricas (PSNR, EC, ER, entropía,
    correlación, error de extracción). EC2 se promedia sobre varias sesiones.
  - hfid_sweep: capacidad y distorsión de HDE-ED para varios h_fid.
  - separable_roundtrip: misma carga por HDE-ED y por DE-IS sobre las partes
    marcadas; ambas extracciones deben devolverla.
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
import metrics
from de_is import deis_capacity, deis_embed, deis_extract, deis_recover
from keying import (KeyStream, gen_public_randomness, gen_sis_keys,
                    stream_generator)
from sharing_pipeline import (hde_embed, hde_extract_restore, preprocess_image,
                              reconstruct_image, share_image)

log = logging.getLogger("Experimentos")


@dataclass
class DealtImage:
    """Estado del repartidor tras una sesión de reparto + HDE-ED."""
    keys: list
    randomness: object
    shares: list
    marked: list
    side: object
    payload: np.ndarray


@dataclass
class SeparableResult:
    hde_bits: np.ndarray
    deis_bits: list
    restored: np.ndarray
    recovered_equal: bool


def session_seeds(seed, repeats):
    """Semillas de 64 bits independientes para `repeats` sesiones."""
    state = np.random.SeedSequence(int(seed)).generate_state(repeats, dtype=np.uint64)
    return [int(s) for s in state]


def random_bits(seed, count, stream=config.STREAM_PAYLOAD):
    return stream_generator(seed, stream).integers(0, 2, size=count, dtype=np.uint8)


def deal(img, params, h_fid=config.H_FID, seed=0, payload=None):
    """
    Preprocesa, reparte e inserta por HDE-ED. Sin carga explícita se usa una
    aleatoria de capacidad máxima.
    """
    height, width = img.shape
    pre, side = preprocess_image(img, h_fid, seed)
    keys = gen_sis_keys(params, height, width, seed)
    randomness = gen_public_randomness(params, height, width, seed)
    shares = share_image(pre, keys, randomness, params)
    if payload is None:
        payload = random_bits(seed, side.available_count)
    marked, side = hde_embed(shares, keys, side, payload, params)
    return DealtImage(keys=keys, randomness=randomness, shares=shares,
                      marked=marked, side=side, payload=np.asarray(payload, dtype=np.uint8))


def run_image_experiment(name, img, params, h_fid=config.H_FID, seed=0,
                         repeats=config.EC2_REPEATS,
                         n_samples=config.CORRELATION_SAMPLES):
    """
    Returns:
        metrics.MetricsReport
    """
    img = np.asarray(img)
    height, width = img.shape
    peak = metrics.residue_peak(params.w)

    ec2_sessions = []
    report = None
    for index, session in enumerate(session_seeds(seed, repeats)):
        dealt = deal(img, params, h_fid, session)

        deis_marked = []
        recovered = []
        deis_errors = []
        ec2 = 0
        for share, key in zip(dealt.marked, dealt.keys):
            capacity = deis_capacity(share, key)
            bits = random_bits(session + share.shareholder_index, capacity)
            marked, labeled, count = deis_embed(share, key, bits, KeyStream(session))
            ec2 += count
            deis_marked.append(marked)
            if index == 0:
                recovered.append(deis_recover(marked, labeled)[0])
                extracted = deis_extract(marked, labeled, KeyStream(session))
                deis_errors.append(metrics.bit_error_rate(bits, extracted))
        ec2_sessions.append(ec2)

        if index:
            continue
        marked_img = reconstruct_image(dealt.marked[:params.t], dealt.keys, params, dealt.side)
        hde_bits, restored = hde_extract_restore(marked_img, dealt.side)
        ec1 = dealt.side.payload_length

        before = [s.residues for s in dealt.marked]
        after = [s.residues for s in deis_marked]
        report = metrics.MetricsReport(
            image=name,
            psnr1=metrics.psnr(img, marked_img),
            ec1=ec1,
            ec2=0.0,
            er_deis=0.0,
            entropy_before=float(np.mean([metrics.entropy(m) for m in before])),
            entropy_after=float(np.mean([metrics.entropy(m) for m in after])),
            correlations_before=_mean_correlations(before, n_samples, session),
            correlations_after=_mean_correlations(after, n_samples, session),
            psnr2=metrics.psnr(img, restored),
            psnr3=min(metrics.psnr(a.residues, b.residues, peak=peak)
                      for a, b in zip(dealt.marked, recovered)),
            er1=metrics.hde_embedding_rate(ec1, height, width),
            bf=metrics.blowup_factor(params.w),
            error1=metrics.bit_error_rate(dealt.payload[:ec1], hde_bits),
            error2=float(np.mean(deis_errors)),
        )

    report.ec2 = float(np.mean(ec2_sessions))
    _, report.er_deis, _ = metrics.embedding_rates(report.ec2, params.n, height,
                                                   width, params.w)
    log.info("%s: PSNR1=%.2f dB EC1=%d EC2=%.1f ER=%.4f errores %.4f/%.4f", name,
             report.psnr1, report.ec1, report.ec2, report.er_deis, report.error1,
             report.error2)
    return report


def _mean_correlations(matrices, n_samples, seed):
    """Media por dirección del coeficiente sobre varias matrices."""
    per_matrix = [metrics.correlations(m, n_samples, seed) for m in matrices]
    return {d: float(np.mean([c[d] for c in per_matrix]))
            for d in config.CORRELATION_DIRECTIONS}


def hfid_sweep(name, img, params, hfids=config.HFID_SWEEP, seed=0):
    """
    Returns:
        filas (image, hfid, ec1, er1, psnr1) en el orden de config.HFID_CSV_HEADER
    """
    img = np.asarray(img)
    height, width = img.shape
    rows = []
    for h_fid in hfids:
        dealt = deal(img, params, h_fid, seed)
        marked_img = reconstruct_image(dealt.marked[:params.t], dealt.keys, params, dealt.side)
        ec1 = dealt.side.payload_length
        psnr1 = metrics.psnr(img, marked_img)
        rows.append((name, "inf" if h_fid == config.H_FID_INFINITE else int(h_fid), ec1,
                     f"{metrics.hde_embedding_rate(ec1, height, width):.6f}",
                     "inf" if psnr1 == float("inf") else f"{psnr1:.6f}"))
        log.info("%s h_fid=%s: EC1=%d PSNR1=%.2f dB", name, h_fid, ec1, psnr1)
    return rows


def separable_roundtrip(img, params, payload, h_fid=config.H_FID, seed=0):
    """
    Inserta `payload` por HDE-ED y después por DE-IS en cada parte marcada.
    Recupera las partes, reconstruye y extrae.
    """
    payload = np.asarray(payload, dtype=np.uint8)
    dealt = deal(img, params, h_fid, seed, payload=payload)
    ks = KeyStream(seed)

    deis_bits = []
    recovered = []
    for share, key in zip(dealt.marked, dealt.keys):
        marked, labeled, _ = deis_embed(share, key, payload, ks)
        deis_bits.append(deis_extract(marked, labeled, ks))
        recovered.append(deis_recover(marked, labeled))

    shares = [s for s, _ in recovered]
    keys = [k for _, k in recovered]
    recovered_equal = all(np.array_equal(a.residues, b.residues) and a.role == b.role
                          for a, b in zip(shares, dealt.marked))
    marked_img = reconstruct_image(shares[:params.t], keys, params, dealt.side)
    hde_bits, restored = hde_extract_restore(marked_img, dealt.side)
    return SeparableResult(hde_bits=hde_bits, deis_bits=deis_bits,
                           restored=restored, recovered_equal=recovered_equal)
