"""Command line entry points.

Subcommands:
  hub          serve the session hub (TCP, optionally WebSocket)
  device       host one device against a hub
  scenario     run a scenario file on a simulated clock
  synth-guide  write the breathing-guide WAV

Set DISIMO_LOG (debug/info/warning/error) to control log verbosity.
Exit codes: 0 success, 2 bad input, 3 connectivity failure.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path

from . import heartsim
from .audio import GuideSpec, synthesize_guide, write_wav
from .device import DeviceConfig
from .host import ConnectivityError, DeviceHostCore, run_host
from .hrv import read_beats, write_beats
from .hub import serve_hub
from .scenario import ScenarioError, load_scenario, run_scenario

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_CONNECTIVITY = 3

logger = logging.getLogger(__name__)


class BadInput(ValueError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("DISIMO_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _parse_color(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise BadInput(f"color must be R,G,B, got {text!r}")
    try:
        channels = tuple(int(p) for p in parts)
    except ValueError:
        raise BadInput(f"color channels must be integers, got {text!r}")
    if any(not 0 <= c <= 255 for c in channels):
        raise BadInput(f"color channels must be in [0, 255], got {text!r}")
    return channels


def _parse_hub_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise BadInput(f"hub address must be HOST:PORT, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise BadInput(f"bad port in hub address {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disimo", description="ambient HRV biofeedback simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_hub = sub.add_parser("hub", help="serve the session hub")
    p_hub.add_argument("--host", default="127.0.0.1")
    p_hub.add_argument("--port", type=int, default=7475)
    p_hub.add_argument("--ws-port", type=int, default=None)

    p_dev = sub.add_parser("device", help="host one device against a hub")
    p_dev.add_argument("--hub", required=True, metavar="HOST:PORT")
    p_dev.add_argument("--id", required=True, dest="device_id")
    p_dev.add_argument("--color", default="120,180,255", metavar="R,G,B")
    p_dev.add_argument(
        "--source",
        default="synth:hr=70,breath=0.25,seed=0",
        help="synth:k=v,... descriptor or file:PATH beat replay",
    )
    p_dev.add_argument("--tick-hz", type=float, default=1.0)

    p_sc = sub.add_parser("scenario", help="run a scenario file")
    p_sc.add_argument("file", type=Path)
    p_sc.add_argument("--accelerate", type=float, default=1.0)
    p_sc.add_argument("--trace", type=Path, default=None, help="trace output (default stdout)")
    p_sc.add_argument("--wav-dir", type=Path, default=None, help="also write guide.wav here")

    p_sg = sub.add_parser("synth-guide", help="write the breathing-guide WAV")
    p_sg.add_argument("--cycles", type=int, default=4)
    p_sg.add_argument("--sample-rate", type=int, default=44100)
    p_sg.add_argument("--gain", type=float, default=0.3)
    p_sg.add_argument("--seed", type=int, default=0)
    p_sg.add_argument("-o", "--output", type=Path, required=True)

    p_sb = sub.add_parser(
        "synth-beats", help="write a synthetic beat stream as a timestamp file"
    )
    p_sb.add_argument("--source", required=True, help="synth:k=v,... descriptor")
    p_sb.add_argument("--duration", type=float, required=True, help="seconds")
    p_sb.add_argument("-o", "--output", type=Path, required=True)

    return parser


def _cmd_hub(args) -> int:
    async def run() -> None:
        server = await serve_hub(args.host, args.port, args.ws_port)
        print(f"hub listening: tcp {server.host}:{server.port}"
              + (f" ws {server.ws_port}" if server.ws_port else ""))
        await server.serve_forever()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    except OSError as exc:
        print(f"cannot serve: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    return EXIT_OK


def _cmd_device(args) -> int:
    hub_host, hub_port = _parse_hub_address(args.hub)
    color = _parse_color(args.color)
    if args.source.startswith("file:"):
        source = read_beats(args.source[len("file:"):])
    else:
        source = heartsim.parse_model(args.source)
    if args.tick_hz <= 0:
        raise BadInput("--tick-hz must be > 0")
    core = DeviceHostCore(
        device_id=args.device_id,
        color=color,
        source=source,
        config=DeviceConfig(user_color=color),
    )
    try:
        asyncio.run(run_host(core, hub_host, hub_port, tick_hz=args.tick_hz))
    except KeyboardInterrupt:
        return EXIT_OK
    except ConnectivityError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONNECTIVITY
    except (ConnectionError, OSError) as exc:
        print(f"connection lost: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    return EXIT_OK


def _cmd_scenario(args) -> int:
    scenario = load_scenario(args.file)
    result = run_scenario(
        scenario,
        accelerate=args.accelerate,
        base_dir=args.file.parent,
        wav_dir=args.wav_dir,
    )
    text = result.jsonl()
    if args.trace is not None:
        args.trace.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_synth_guide(args) -> int:
    spec = GuideSpec(
        cycles=args.cycles,
        sample_rate=args.sample_rate,
        peak_gain=args.gain,
        seed=args.seed,
    )
    buffer = synthesize_guide(spec)
    write_wav(buffer, spec.sample_rate, args.output)
    print(f"wrote {args.output} ({spec.duration:.1f} s at {spec.sample_rate} Hz)")
    return EXIT_OK


def _cmd_synth_beats(args) -> int:
    if args.duration <= 0:
        raise BadInput("--duration must be > 0")
    model = heartsim.parse_model(args.source)
    beats = heartsim.generate_beats(model, args.duration)
    write_beats(args.output, beats)
    print(f"wrote {args.output} ({len(beats)} beats over {args.duration:g} s)")
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "hub": _cmd_hub,
        "device": _cmd_device,
        "scenario": _cmd_scenario,
        "synth-guide": _cmd_synth_guide,
        "synth-beats": _cmd_synth_beats,
    }
    try:
        return handlers[args.command](args)
    except (BadInput, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
