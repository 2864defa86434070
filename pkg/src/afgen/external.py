"""Line-delimited JSON protocol for objectives living in a child process.

The child is spawned once and evaluated serially: each request is one line
``{"x": [original-unit coordinates]}`` on its stdin, each reply one line
``{"y": value}`` on its stdout. Anything else (exit, malformed line,
timeout) raises ProtocolError.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from .bo import Objective

__all__ = ["ProtocolError", "ExternalProcess", "external_objective"]

DEFAULT_TIMEOUT = 600.0


class ProtocolError(RuntimeError):
    """The child process violated the evaluation protocol."""


class ExternalProcess:
    """One long-lived child process speaking the stdio JSON protocol."""

    def __init__(self, command: str, timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)

    def evaluate(self, x_original: np.ndarray) -> float:
        if self._proc.poll() is not None:
            raise ProtocolError(f"child exited with code {self._proc.returncode}")
        request = json.dumps({"x": [float(v) for v in x_original]})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise ProtocolError(f"child stdin closed: {err}") from err
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise ProtocolError(f"evaluation timed out after {self.timeout}s") from None
        if line is None:
            raise ProtocolError(
                f"child closed stdout (exit code {self._proc.poll()})"
            )
        try:
            reply = json.loads(line)
            y = float(reply["y"])
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as err:
            raise ProtocolError(f"malformed reply line {line.rstrip()!r}: {err}") from err
        return y

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:  # pragma: no cover
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalProcess":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_objective(
    command: str,
    dim: int,
    bounds: np.ndarray,
    timeout: float = DEFAULT_TIMEOUT,
) -> tuple[Objective, ExternalProcess]:
    """Objective backed by a child process; caller closes the process.

    Evaluations are serial: the returned objective is marked ``serial`` so
    the harness will not fan repetitions out to workers.
    """
    proc = ExternalProcess(command, timeout=timeout)
    bounds = np.asarray(bounds, dtype=float).reshape(dim, 2)

    def eval_unit(x01: np.ndarray) -> float:
        x = bounds[:, 0] + np.asarray(x01, dtype=float) * (bounds[:, 1] - bounds[:, 0])
        return proc.evaluate(x)

    return Objective(eval_unit, bounds, dim, serial=True), proc
