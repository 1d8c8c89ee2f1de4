"""
Línea de comandos `photonstats`.

Cada subcomando lee ficheros, ejecuta un servicio y escribe su salida
principal junto a un manifiesto `<salida>.manifest.json`. El resumen va a
stdout en JSON; los logs y errores, a stderr. Códigos de salida: 2 error de
configuración o de canal, 3 error de E/S, 4 datos insuficientes.

El paralelismo se limita con la variable de entorno PHOTONSTATS_THREADS.
"""

import time
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console

from app.core.config import get_settings
from app.core.errors import ConfigError, InsufficientDataError, PhotonStatsError
from app.core.logging import get_logger, setup_logging
from app.core.units import FS, NS, PS, angular_frequency
from app.schemas.emitter import DriveMode
from app.schemas.histogram import Histogram
from app.schemas.interferometry import EnvelopeShape
from app.schemas.manifest import RunManifest
from app.schemas.spectrum import FilterSpec
from app.schemas.tags import SYNC_CHANNEL, TagStream
from app.services import correlator, interferometry, photophys
from app.services.emitter_sim import simulate as run_simulation
from app.storage.config_file import load_simulation_config
from app.storage.manifest import write_manifest
from app.storage.ptag import read_ptag, write_ptag
from app.storage.results import components_to_list, dumps, fit_to_dict, write_json
from app.storage.tables import (
    read_saturation,
    read_spectrum,
    write_g2,
    write_histogram,
    write_series,
)

app = typer.Typer(
    name="photonstats",
    help="Simulación y análisis de estadística de fotones",
    no_args_is_help=True,
    add_completion=False,
)
err_console = Console(stderr=True)
logger = get_logger(__name__)


class ShapeOption(str, Enum):
    EXP = "exp"
    GAUSS = "gauss"
    AUTO = "auto"


SHAPES = {
    ShapeOption.EXP: EnvelopeShape.EXPONENTIAL,
    ShapeOption.GAUSS: EnvelopeShape.GAUSSIAN,
    ShapeOption.AUTO: "auto",
}

# Ventana de correlación por defecto (ns)
DEFAULT_WINDOW_NS = 200.0


@contextmanager
def _guard() -> Iterator[None]:
    """Traducir los errores de dominio a códigos de salida"""
    try:
        yield
    except PhotonStatsError as exc:
        err_console.print(f"[bold red]Error:[/bold red] {exc.message}")
        raise typer.Exit(code=exc.exit_code) from exc


def _finish(
    command: str,
    output: Path,
    started: float,
    summary: dict[str, Any],
    *,
    config: dict[str, Any],
    inputs: list[Path],
    outputs: list[Path],
    seed: int | None = None,
) -> None:
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        tool_version=get_settings().VERSION,
        wall_time_s=time.perf_counter() - started,
    )
    write_manifest(output, manifest)
    typer.echo(dumps(summary), nl=False)


def _correlate_checked(
    stream: TagStream, ch_a: int, ch_b: int, bin_width: float, window: float
) -> Histogram:
    """Correlación con el umbral mínimo de coincidencias"""
    h = correlator.correlate(stream, ch_a, ch_b, bin_width, window)
    minimum = get_settings().MIN_COINCIDENCES
    if h.total < minimum:
        raise InsufficientDataError(
            f"Solo {h.total} coincidencias en la ventana; se necesitan {minimum}"
        )
    return h


def _rep_period(stream: TagStream, rep_period_ns: float | None) -> float:
    if rep_period_ns is not None:
        return rep_period_ns * NS
    sync = stream.ticks_of(SYNC_CHANNEL)
    if sync.size < 2:
        raise ConfigError("Sin canal de sincronismo: indique --rep-period-ns")
    return float(np.median(np.diff(sync))) * stream.resolution


@app.callback()
def main() -> None:
    """PhotonStats: emisores de fotón único, de la simulación al ajuste"""
    setup_logging()


@app.command()
def simulate(
    config: Annotated[Path, typer.Argument(help="Fichero clave = valor")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Fichero PTAG de salida")],
    seed: Annotated[int | None, typer.Option(help="Sustituye la semilla del fichero")] = None,
) -> None:
    """Simular un flujo de etiquetas temporales y escribirlo en PTAG"""
    started = time.perf_counter()
    with _guard():
        cfg = load_simulation_config(config)
        if seed is not None:
            cfg = cfg.model_copy(update={"seed": seed})
        try:
            setup = cfg.to_setup()
        except ValidationError as exc:
            raise ConfigError(f"{config}: {exc.errors()[0]['msg']}") from exc
        stream = run_simulation(setup.emitter, setup.detector, setup.config)
        write_ptag(out, stream)

        duration = setup.config.duration
        detector = [ch for ch in sorted(stream.present_channels()) if ch != SYNC_CHANNEL]
        counts = {str(ch): int(stream.ticks_of(ch).size) for ch in detector}
        detected = sum(counts.values())
        summary = {
            "counts": counts,
            "detected": detected,
            "duration_s": duration,
            "mean_rate_hz": detected / duration,
            "sync_pulses": int(stream.ticks_of(SYNC_CHANNEL).size),
        }
        _finish(
            "simulate",
            out,
            started,
            summary,
            config=cfg.model_dump(mode="json"),
            inputs=[config],
            outputs=[out],
            seed=cfg.seed,
        )


@app.command()
def g2(
    ptag: Annotated[Path, typer.Argument(help="Fichero PTAG")],
    out: Annotated[Path, typer.Option("--out", "-o", help="CSV normalizado")],
    mode: Annotated[DriveMode, typer.Option(help="cw o pulsed")] = DriveMode.CW,
    bin_ns: Annotated[float, typer.Option("--bin-ns", help="Anchura de bin (ns)")] = 1.0,
    window_ns: Annotated[
        float | None,
        typer.Option("--window-ns", help="Ventana ±τ (ns); en pulsado al menos 11.5 periodos"),
    ] = None,
    rep_period_ns: Annotated[
        float | None, typer.Option("--rep-period-ns", help="Periodo de repetición (ns)")
    ] = None,
    exclude: Annotated[int, typer.Option(help="Picos excluidos a cada lado")] = 0,
    channel_a: Annotated[int, typer.Option("--channel-a")] = 0,
    channel_b: Annotated[int, typer.Option("--channel-b")] = 1,
    fit: Annotated[bool, typer.Option("--fit/--no-fit", help="Ajustar el modelo")] = False,
    seed: Annotated[int, typer.Option(help="Semilla del arranque múltiple")] = 0,
) -> None:
    """Correlación g²(τ) continua o pulsada de dos canales"""
    started = time.perf_counter()
    with _guard():
        stream = read_ptag(ptag)
        period = _rep_period(stream, rep_period_ns) if mode == DriveMode.PULSED else None
        if window_ns is None:
            window_ns = DEFAULT_WINDOW_NS
            if period is not None:
                # ±(MIN_PULSED_PEAKS/2 + 1) periodos: caben los picos completos
                window_ns = max(window_ns, (correlator.MIN_PULSED_PEAKS / 2 + 1) * period / NS)
        h = _correlate_checked(stream, channel_a, channel_b, bin_ns * NS, window_ns * NS)
        fit_path = out.with_suffix(".json")
        payload: dict[str, Any]
        if period is not None:
            pulsed = correlator.normalize_pulsed(h, period, exclude)
            write_series(out, pulsed.peak_delays, pulsed.peak_areas / pulsed.reference_area)
            payload = {
                "mode": "pulsed",
                "g2_0": pulsed.g2_0,
                "reference_area": pulsed.reference_area,
                "excluded": pulsed.excluded,
                "rep_period_s": period,
            }
        else:
            duration = stream.span()
            if duration <= 0:
                raise InsufficientDataError("El flujo no cubre un intervalo de tiempo")
            rates = tuple(stream.ticks_of(ch).size / duration for ch in (channel_a, channel_b))
            curve = correlator.normalize_cw(h, (rates[0], rates[1]), duration)
            write_g2(out, curve)
            payload = {"mode": "cw", "g2_0": curve.value_at_zero()}
            if fit:
                payload["fit"] = fit_to_dict(correlator.fit_g2(curve, seed=seed))
        outputs = [out]
        if fit:
            write_json(fit_path, payload)
            outputs.append(fit_path)
        summary = {**payload, "coincidences": h.total}
        _finish(
            "g2",
            out,
            started,
            summary,
            config={
                "mode": mode.value,
                "bin_ns": bin_ns,
                "window_ns": window_ns,
                "rep_period_ns": rep_period_ns,
                "exclude": exclude,
                "channels": [channel_a, channel_b],
                "fit": fit,
            },
            inputs=[ptag],
            outputs=outputs,
            seed=seed,
        )


@app.command()
def lifetime(
    ptag: Annotated[Path, typer.Argument(help="Fichero PTAG con canal de sincronismo")],
    out: Annotated[Path, typer.Option("--out", "-o", help="CSV del histograma")],
    bin_ps: Annotated[float, typer.Option("--bin-ps", help="Anchura de bin (ps)")] = 16.0,
    irf_fwhm_ps: Annotated[float, typer.Option("--irf-fwhm-ps", help="FWHM del IRF (ps)")] = 0.0,
    channel: Annotated[int, typer.Option(help="Canal de detección")] = 0,
    sync_channel: Annotated[int, typer.Option("--sync-channel")] = SYNC_CHANNEL,
) -> None:
    """Histograma de tiempos de llegada y ajuste de T1"""
    started = time.perf_counter()
    with _guard():
        stream = read_ptag(ptag)
        h = correlator.lifetime_histogram(stream, sync_channel, channel, bin_ps * PS)
        write_histogram(out, h)
        result = correlator.fit_lifetime(h, irf_fwhm_ps * PS, _rep_period(stream, None))
        fit_path = out.with_suffix(".json")
        write_json(fit_path, fit_to_dict(result))
        summary = {
            "T1_ns": result.value("T1") / NS,
            "T1_stderr_ns": result.stderr("T1") / NS,
            "converged": result.converged,
            "detections": h.total,
            "flags": result.flags,
        }
        _finish(
            "lifetime",
            out,
            started,
            summary,
            config={
                "bin_ps": bin_ps,
                "irf_fwhm_ps": irf_fwhm_ps,
                "channel": channel,
                "sync_channel": sync_channel,
            },
            inputs=[ptag],
            outputs=[out, fit_path],
        )


@app.command()
def fitspec(
    spectrum: Annotated[Path, typer.Argument(help="CSV energy_eV,counts")],
    out: Annotated[Path, typer.Option("--out", "-o", help="JSON de la descomposición")],
    max_components: Annotated[int, typer.Option("--max-components")] = 6,
) -> None:
    """Descomposición lorentziana y factor de Debye-Waller"""
    started = time.perf_counter()
    with _guard():
        sampled = read_spectrum(spectrum)
        result = photophys.fit_spectrum(sampled, max_components=max_components)
        payload = {
            "components": components_to_list(result.spectrum.components),
            "dw_factor": result.dw_factor,
            "kind_fractions": result.kind_fractions,
            "chi2_reduced": result.chi2_reduced,
            "converged": result.converged,
        }
        write_json(out, payload)
        summary = {
            "dw_factor": result.dw_factor,
            "components": len(result.spectrum.components),
            "converged": result.converged,
        }
        _finish(
            "fitspec",
            out,
            started,
            summary,
            config={"max_components": max_components},
            inputs=[spectrum],
            outputs=[out],
        )


@app.command()
def saturation(
    table: Annotated[Path, typer.Argument(help="CSV power_W,intensity_Hz[,sigma_Hz]")],
    out: Annotated[Path, typer.Option("--out", "-o", help="JSON del ajuste")],
    t1_ns: Annotated[
        float | None, typer.Option("--t1-ns", help="T1 para la eficiencia fuente-detector")
    ] = None,
) -> None:
    """Ajuste del modelo de saturación I(P) = I_inf/(1 + P_sat/P)"""
    started = time.perf_counter()
    with _guard():
        power, intensity, sigma = read_saturation(table)
        result = photophys.fit_saturation(power, intensity, sigma)
        if t1_ns is not None:
            result = result.with_metrics(
                source_to_detector_efficiency=photophys.source_to_detector_efficiency(
                    result.value("I_inf"), t1_ns * NS
                )
            )
        write_json(out, fit_to_dict(result))
        summary = {
            "I_inf_hz": result.value("I_inf"),
            "P_sat_w": result.value("P_sat"),
            "converged": result.converged,
            **result.metrics,
        }
        _finish(
            "saturation",
            out,
            started,
            summary,
            config={"t1_ns": t1_ns},
            inputs=[table],
            outputs=[out],
        )


@app.command()
def michelson(
    spectrum: Annotated[Path, typer.Argument(help="CSV energy_eV,counts")],
    out: Annotated[Path, typer.Option("--out", "-o", help="JSON del ajuste de envolvente")],
    lowpass_ev: Annotated[
        float | None, typer.Option("--lowpass-ev", help="Deja pasar E ≤ valor")
    ] = None,
    highpass_ev: Annotated[
        float | None, typer.Option("--highpass-ev", help="Deja pasar E ≥ valor")
    ] = None,
    shape: Annotated[ShapeOption, typer.Option(help="exp, gauss o auto")] = ShapeOption.AUTO,
    v0: Annotated[float, typer.Option("--v0", min=0.0, max=1.0)] = 0.8,
    max_delay_fs: Annotated[float, typer.Option("--max-delay-fs")] = 1500.0,
    samples_per_fringe: Annotated[int, typer.Option("--samples-per-fringe", min=8)] = 16,
) -> None:
    """Interferograma del espectro filtrado, visibilidad y ajuste de T2*"""
    started = time.perf_counter()
    with _guard():
        sampled = read_spectrum(spectrum)
        try:
            band = FilterSpec(low_edge=highpass_ev, high_edge=lowpass_ev)
        except ValidationError as exc:
            raise ConfigError("El filtro debe cumplir highpass < lowpass") from exc
        filtered = photophys.apply_filter(sampled, band)
        peak_ev = float(filtered.energy[int(np.argmax(filtered.counts))])
        omega0 = angular_frequency(peak_ev)
        step = 2.0 * np.pi / omega0 / samples_per_fringe
        delays = np.arange(0.0, max_delay_fs * FS, step)
        ig = interferometry.interferogram_from_spectrum(filtered, v0, delays)
        trace = interferometry.extract_visibility(ig, omega0)
        result = interferometry.fit_envelope(trace, SHAPES[shape])

        ig_path = out.with_suffix(".interferogram.csv")
        vis_path = out.with_suffix(".visibility.csv")
        write_series(ig_path, ig.delays, ig.intensity)
        write_series(vis_path, trace.delays, trace.visibility)
        write_json(out, fit_to_dict(result))
        summary = {
            "model": result.model,
            "T2_star_fs": result.value("T2_star") / FS,
            "T2_star_stderr_fs": result.stderr("T2_star") / FS,
            "V0": result.value("V0"),
            "converged": result.converged,
            **result.metrics,
        }
        _finish(
            "michelson",
            out,
            started,
            summary,
            config={
                "lowpass_ev": lowpass_ev,
                "highpass_ev": highpass_ev,
                "shape": shape.value,
                "v0": v0,
                "max_delay_fs": max_delay_fs,
                "samples_per_fringe": samples_per_fringe,
            },
            inputs=[spectrum],
            outputs=[out, ig_path, vis_path],
        )


if __name__ == "__main__":
    app()
