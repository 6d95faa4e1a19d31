#!/usr/bin/env python3
"""Launch the hierarchy solver service.

Steps:
- load ``.env`` from the repository root
- install requirements.txt (unless ``--skip-install``)
- create the bench output directory
- start uvicorn and block until ``/health`` answers or the timeout passes
- stop the server on Ctrl+C
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

ROOT_DIR = Path(__file__).resolve().parents[1]
REQUIREMENTS_FILE = ROOT_DIR / "requirements.txt"
UVICORN_APP = "src.hlsp_dual.api.server:app"


@dataclass
class ServiceLauncher:
    host: str
    port: int
    reload: bool = False
    threads: Optional[int] = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def command(self) -> List[str]:
        cmd = [sys.executable, "-m", "uvicorn", UVICORN_APP, "--host", self.host, "--port", str(self.port)]
        if self.reload:
            cmd.append("--reload")
        return cmd

    def environment(self) -> dict[str, str]:
        env = os.environ.copy()
        if self.threads is not None:
            env["HLSP_THREADS"] = str(self.threads)
        return env

    def wait_healthy(self, timeout: float) -> bool:
        import httpx

        url = f"{self.base_url}/health"
        print(f"[service] Waiting for {url} ...")
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            try:
                if httpx.get(url, timeout=3.0).status_code == 200:
                    print("[service] Healthy.")
                    return True
            except httpx.HTTPError:
                pass
            time.sleep(1.0)
        print(f"[service] No healthy response after {timeout:.0f}s.")
        return False


def load_env_file() -> None:
    env_file = ROOT_DIR / ".env"
    if not env_file.exists():
        return
    try:
        from dotenv import load_dotenv
    except ImportError:
        return
    load_dotenv(env_file)
    print(f"[env] Loaded {env_file}")


def install_requirements(upgrade: bool) -> None:
    if not REQUIREMENTS_FILE.exists():
        raise FileNotFoundError(f"Could not find requirements file at {REQUIREMENTS_FILE}.")
    cmd = [sys.executable, "-m", "pip", "install", "-r", str(REQUIREMENTS_FILE)]
    if upgrade:
        cmd.append("--upgrade")
    print(f"[deps] {' '.join(cmd)}")
    subprocess.check_call(cmd, cwd=ROOT_DIR)  # noqa: S603


def stop(proc: subprocess.Popen) -> None:
    if proc.poll() is not None:
        return
    print("[service] Stopping...")
    proc.terminate()
    try:
        proc.wait(timeout=10)
    except subprocess.TimeoutExpired:
        proc.kill()


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Install dependencies and start the solver API.")
    parser.add_argument("--skip-install", action="store_true", help="Do not run pip install first.")
    parser.add_argument("--upgrade-deps", action="store_true", help="Pass --upgrade to pip.")
    parser.add_argument("--host", default="127.0.0.1", help="Bind address (default: 127.0.0.1).")
    parser.add_argument("--port", type=int, default=8000, help="Port (default: 8000).")
    parser.add_argument("--startup-timeout", type=float, default=30.0, help="Seconds to wait for /health.")
    parser.add_argument("--threads", type=int, default=None, help="Exported as HLSP_THREADS.")
    parser.add_argument("--reload", action="store_true", help="Enable uvicorn auto-reload.")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    load_env_file()

    if args.skip_install:
        print("[deps] Skipped.")
    else:
        try:
            install_requirements(args.upgrade_deps)
        except (subprocess.CalledProcessError, FileNotFoundError) as exc:
            print(f"[deps] Installation failed: {exc}")
            return 1

    launcher = ServiceLauncher(host=args.host, port=args.port, reload=args.reload, threads=args.threads)
    env = launcher.environment()
    (ROOT_DIR / env.get("HLSP_OUTPUT_DIR", "results")).mkdir(parents=True, exist_ok=True)

    print(f"[service] {' '.join(launcher.command())}")
    proc = subprocess.Popen(launcher.command(), cwd=ROOT_DIR, env=env)  # noqa: S603
    try:
        launcher.wait_healthy(args.startup_timeout)
        print(f"[service] API {launcher.base_url}, docs {launcher.base_url}/docs (Ctrl+C to stop)")
        proc.wait()
        print(f"[service] Exited with status {proc.returncode}.")
    except KeyboardInterrupt:
        print("\n[service] Interrupted.")
    finally:
        stop(proc)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
