"""
main.py - Línea de comandos del repartidor y de los accionistas.

Integra todos los módulos del proyecto:
  - Reparto (t, n) con el teorema chino del resto (crt_core.py)
  - Material de claves determinista (keying.py)
  - Preprocesado, reparto, HDE-ED y reconstrucción (sharing_pipeline.py)
  - Ocultación dentro de una parte, DE-IS (de_is.py)
  - Métricas y experimentos (metrics.py, experiments.py)
  - Formatos de fichero (io_formats.py)
  - Imágenes sintéticas (demo_images.py)

Uso:
  python main.py keygen --width 64 --height 64 --seed 1 --out claves/
  python main.py share lena.pgm --keys claves/ --out partes/ --hfid 10 --scramble-seed 7
  python main.py hde-embed --shares partes/ --keys claves/ --payload datos.bin --out marcadas/
  python main.py reconstruct marcadas/share_1.crds ... --keys claves/ --side marcadas/side.crsi --out marcada.pgm
  python main.py hde-extract marcada.pgm --side marcadas/side.crsi --payload-out datos.out --out original.pgm
  python main.py deis-embed share_1.crds --key key_1.crky --params claves/params.json --payload datos.bin --seed 3 --out-share s.crds --out-key k.crky
  python main.py deis-extract s.crds --key k.crky --seed 3 --payload-out datos.out
  python main.py deis-recover s.crds --key k.crky --params claves/params.json --out-share r.crds --out-key r.crky
  python main.py metrics lena.pgm baboon.pgm --seed 1 --out metricas.csv --details detalle.csv
  python main.py hfid-sweep lena.pgm --out barrido.csv
  python main.py histogram partes/share_1.crds s.crds --params claves/params.json --out hist.csv
  python main.py demo-image natural --out natural.pgm

Códigos de salida:
  0 correcto, 2 uso/parámetros, 3 menos de t partes, 4 formato, 5 consistencia
"""

import argparse
import logging
import sys
from pathlib import Path

import config
import io_formats
import metrics
from crt_core import validate_params
from de_is import deis_embed, deis_extract, deis_recover
from demo_images import DemoImageGenerator
from errors import SisError
from experiments import hfid_sweep, run_image_experiment
from keying import KeyStream, gen_public_randomness, gen_sis_keys
from sharing_pipeline import (hde_embed, hde_extract_restore, preprocess_image,
                              reconstruct_image, share_image)

log = logging.getLogger("Main")


def parse_hfid(text):
    """'inf' o un entero >= 0; desde H_FID_SATURATION equivale a 'inf'."""
    if text.lower() in ("inf", "infinity", "∞"):
        return config.H_FID_INFINITE
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"h_fid no válido: {text}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("h_fid debe ser >= 0")
    if value >= config.H_FID_SATURATION:
        return config.H_FID_INFINITE
    return value


def build_parser():
    """Parser con un subcomando por operación."""
    parser = argparse.ArgumentParser(
        description="Reparto de imágenes (t, n) por CRT con ocultación reversible separable"
    )
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Mensajes de depuración')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('keygen', help='Parámetros, claves SIS y matriz R')
    p.add_argument('--image', help='Tomar el tamaño de esta imagen PGM')
    p.add_argument('--height', type=int, default=config.DEMO_SIZE)
    p.add_argument('--width', type=int, default=config.DEMO_SIZE)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--w', type=int, default=config.W_BITS)
    p.add_argument('--t', type=int, default=config.THRESHOLD)
    p.add_argument('--n', type=int, default=config.N_SHAREHOLDERS)
    p.add_argument('--q0', type=int, default=config.Q0)
    p.add_argument('--pool', type=int, nargs='+', default=list(config.PRIME_POOL))
    p.add_argument('--out', required=True, help='Directorio de salida')

    p = sub.add_parser('share', help='Imagen -> n partes + información lateral')
    p.add_argument('image')
    p.add_argument('--keys', required=True, help='Directorio de keygen')
    p.add_argument('--hfid', type=parse_hfid, default=config.H_FID)
    p.add_argument('--scramble-seed', type=int, default=0)
    p.add_argument('--out', required=True)

    p = sub.add_parser('hde-embed', help='Inserta datos en las partes (HDE-ED)')
    p.add_argument('--shares', required=True, help='Directorio con partes y side.crsi')
    p.add_argument('--keys', required=True)
    p.add_argument('--payload', required=True)
    p.add_argument('--bits', type=int, help='Número de bits a usar del fichero')
    p.add_argument('--out', required=True)

    p = sub.add_parser('reconstruct', help='>= t partes -> imagen PGM')
    p.add_argument('shares', nargs='+')
    p.add_argument('--keys', required=True)
    p.add_argument('--side', required=True)
    p.add_argument('--out', required=True)

    p = sub.add_parser('hde-extract', help='Imagen marcada -> datos + original')
    p.add_argument('image')
    p.add_argument('--side', required=True)
    p.add_argument('--payload-out', required=True)
    p.add_argument('--out', required=True)

    p = sub.add_parser('deis-embed', help='Inserta datos en una parte (DE-IS)')
    p.add_argument('share')
    p.add_argument('--key', required=True)
    p.add_argument('--params', required=True)
    p.add_argument('--payload', required=True)
    p.add_argument('--bits', type=int)
    p.add_argument('--seed', type=int, required=True, help='Clave de ocultación')
    p.add_argument('--out-share', required=True)
    p.add_argument('--out-key', required=True)

    p = sub.add_parser('deis-extract', help='Extrae los datos DE-IS de una parte')
    p.add_argument('share')
    p.add_argument('--key', required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--payload-out', required=True)

    p = sub.add_parser('deis-recover', help='Recupera la parte y la clave originales')
    p.add_argument('share')
    p.add_argument('--key', required=True)
    p.add_argument('--params', required=True)
    p.add_argument('--out-share', required=True)
    p.add_argument('--out-key', required=True)

    p = sub.add_parser('metrics', help='CSV de métricas por imagen')
    p.add_argument('images', nargs='+')
    p.add_argument('--hfid', type=parse_hfid, default=config.H_FID)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--repeats', type=int, default=config.EC2_REPEATS)
    p.add_argument('--samples', type=int, default=config.CORRELATION_SAMPLES)
    p.add_argument('--out', help='Fichero CSV (por defecto salida estándar)')
    p.add_argument('--details', help='CSV con PSNR2, PSNR3, ER1, BF y errores de extracción')

    p = sub.add_parser('hfid-sweep', help='EC1 y PSNR1 para varios h_fid')
    p.add_argument('image')
    p.add_argument('--hfids', type=parse_hfid, nargs='+', default=list(config.HFID_SWEEP))
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out')

    p = sub.add_parser('histogram', help='Histograma de residuos de una o varias partes')
    p.add_argument('shares', nargs='+')
    p.add_argument('--params', required=True)
    p.add_argument('--out')

    p = sub.add_parser('demo-image', help='Escribe una imagen sintética')
    p.add_argument('kind', choices=config.DEMO_KINDS)
    p.add_argument('--size', type=int, default=config.DEMO_SIZE)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True)
    return parser


class SisApp:
    """
    Ejecuta un subcomando: lee ficheros, llama a la operación del módulo
    correspondiente y escribe el resultado. Toda la lógica está en los módulos.
    """

    def __init__(self, args):
        self.args = args

    def run(self):
        handler = getattr(self, "_cmd_" + self.args.command.replace('-', '_'))
        handler()
        return config.EXIT_OK

    # ---------------- utilidades ----------------
    @staticmethod
    def _load_keys(directory, params):
        directory = Path(directory)
        return [io_formats.read_key(directory / config.KEY_FILE_PATTERN.format(index=i),
                                    params)
                for i in range(1, params.n + 1)]

    @staticmethod
    def _share_outputs(out, shares, side, params):
        """Partes e información lateral codificadas, listas para write_outputs."""
        outputs = {out / config.SIDE_INFO_FILE: io_formats.encode_side_info(side, params)}
        for share in shares:
            outputs[out / config.SHARE_FILE_PATTERN.format(index=share.shareholder_index)] = \
                io_formats.encode_share(share, params)
        return outputs

    @staticmethod
    def _write_csv(out, header, rows):
        if out:
            with open(out, 'w', newline='') as stream:
                io_formats.write_csv(stream, header, rows)
        else:
            io_formats.write_csv(sys.stdout, header, rows)

    # ---------------- repartidor ----------------
    def _cmd_keygen(self):
        a = self.args
        params = validate_params(w=a.w, t=a.t, n=a.n, q0=a.q0, pool=a.pool)
        height, width = a.height, a.width
        if a.image:
            height, width = io_formats.read_pgm(a.image).shape
        keys = gen_sis_keys(params, height, width, a.seed)
        randomness = gen_public_randomness(params, height, width, a.seed)

        out = Path(a.out)
        outputs = {out / config.PARAMS_FILE: io_formats.encode_params(params)}
        for key in keys:
            outputs[out / config.KEY_FILE_PATTERN.format(index=key.shareholder_index)] = \
                io_formats.encode_key(key, params)
        outputs[out / config.RANDOMNESS_FILE] = io_formats.encode_randomness(randomness, params)
        io_formats.write_outputs(outputs)
        log.info("Claves de %d accionistas (%dx%d) en %s", params.n, height, width, out)

    def _cmd_share(self):
        a = self.args
        keys_dir = Path(a.keys)
        params = io_formats.read_params(keys_dir / config.PARAMS_FILE)
        keys = self._load_keys(keys_dir, params)
        randomness = io_formats.read_randomness(keys_dir / config.RANDOMNESS_FILE, params)
        img = io_formats.read_pgm(a.image)

        pre, side = preprocess_image(img, a.hfid, a.scramble_seed)
        shares = share_image(pre, keys, randomness, params)

        out = Path(a.out)
        io_formats.write_outputs(self._share_outputs(out, shares, side, params))
        log.info("%d partes en %s; capacidad HDE-ED %d bits", len(shares), out,
                 side.available_count)

    def _cmd_hde_embed(self):
        a = self.args
        keys_dir = Path(a.keys)
        shares_dir = Path(a.shares)
        params = io_formats.read_params(keys_dir / config.PARAMS_FILE)
        keys = self._load_keys(keys_dir, params)
        shares = [io_formats.read_share(p, params)
                  for p in sorted(shares_dir.glob(config.SHARE_FILE_PATTERN.format(index='*')))]
        side = io_formats.read_side_info(shares_dir / config.SIDE_INFO_FILE, params)
        payload = io_formats.read_payload(a.payload, a.bits)

        marked, side = hde_embed(shares, keys, side, payload, params)

        io_formats.write_outputs(self._share_outputs(Path(a.out), marked, side, params))
        log.info("%d bits insertados por HDE-ED", side.payload_length)

    def _cmd_reconstruct(self):
        a = self.args
        keys_dir = Path(a.keys)
        params = io_formats.read_params(keys_dir / config.PARAMS_FILE)
        shares = [io_formats.read_share(p, params) for p in a.shares]
        keys = self._load_keys(keys_dir, params)
        side = io_formats.read_side_info(a.side, params)

        img = reconstruct_image(shares, keys, params, side)
        io_formats.write_pgm(a.out, img)
        log.info("Imagen reconstruida en %s", a.out)

    def _cmd_hde_extract(self):
        a = self.args
        side = io_formats.read_side_info(a.side)
        bits, img = hde_extract_restore(io_formats.read_pgm(a.image), side)
        io_formats.write_outputs({a.payload_out: io_formats.encode_payload(bits),
                                  a.out: io_formats.encode_pgm(img)})
        log.info("%d bits extraídos; imagen restaurada en %s", bits.size, a.out)

    # ---------------- accionistas ----------------
    def _cmd_deis_embed(self):
        a = self.args
        params = io_formats.read_params(a.params)
        share = io_formats.read_share(a.share, params)
        key = io_formats.read_key(a.key, params)
        payload = io_formats.read_payload(a.payload, a.bits)

        marked, labeled, count = deis_embed(share, key, payload, KeyStream(a.seed))
        io_formats.write_outputs({a.out_share: io_formats.encode_share(marked, params),
                                  a.out_key: io_formats.encode_key(labeled, params)})
        log.info("%d bits insertados por DE-IS", count)

    def _cmd_deis_extract(self):
        a = self.args
        share = io_formats.read_share(a.share)
        key = io_formats.read_key(a.key)
        bits = deis_extract(share, key, KeyStream(a.seed))
        io_formats.write_payload(a.payload_out, bits)
        log.info("%d bits extraídos por DE-IS", bits.size)

    def _cmd_deis_recover(self):
        a = self.args
        params = io_formats.read_params(a.params)
        share, key = deis_recover(io_formats.read_share(a.share, params),
                                  io_formats.read_key(a.key, params))
        io_formats.write_outputs({a.out_share: io_formats.encode_share(share, params),
                                  a.out_key: io_formats.encode_key(key, params)})
        log.info("Parte %d y su clave recuperadas", share.shareholder_index)

    # ---------------- experimentos ----------------
    def _cmd_metrics(self):
        a = self.args
        params = validate_params()
        reports = []
        for path in a.images:
            report = run_image_experiment(Path(path).stem, io_formats.read_pgm(path), params,
                                          h_fid=a.hfid, seed=a.seed, repeats=a.repeats,
                                          n_samples=a.samples)
            reports.append(report)
        self._write_csv(a.out, config.METRICS_CSV_HEADER, [r.to_row() for r in reports])
        if a.details:
            self._write_csv(a.details, config.METRICS_DETAIL_CSV_HEADER,
                            [r.to_detail_row() for r in reports])

    def _cmd_hfid_sweep(self):
        a = self.args
        rows = hfid_sweep(Path(a.image).stem, io_formats.read_pgm(a.image),
                          validate_params(), a.hfids, a.seed)
        self._write_csv(a.out, config.HFID_CSV_HEADER, rows)

    def _cmd_histogram(self):
        a = self.args
        params = io_formats.read_params(a.params)
        shares = [io_formats.read_share(p, params) for p in a.shares]
        columns = [metrics.residue_histogram(s.residues, params.w) for s in shares]
        header = (config.HISTOGRAM_VALUE_COLUMN, *(Path(p).stem for p in a.shares))
        rows = [(value, *(int(c[value]) for c in columns))
                for value in range(metrics.residue_peak(params.w) + 1)]
        self._write_csv(a.out, header, rows)
        log.info("Histograma de %d partes (%d símbolos)", len(shares), len(rows))

    def _cmd_demo_image(self):
        a = self.args
        img = DemoImageGenerator(a.size, a.size, a.seed).generate(a.kind)
        io_formats.write_pgm(a.out, img)
        log.info("Imagen '%s' %dx%d en %s", a.kind, a.size, a.size, a.out)


def main(argv=None):
    """Punto de entrada principal; devuelve el código de salida."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format=config.LOG_FORMAT, force=True)
    try:
        return SisApp(args).run()
    except SisError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("No se pudo acceder a %s: %s", exc.filename, exc.strerror)
        return config.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
