#!/usr/bin/env python3
"""Run the HTTP API.

Examples:
    python scripts/serve.py --port 8000 --fixtures-dir fixtures/agents
    python scripts/serve.py --config server.toml
    AGENT_API_URL=... AGENT_API_KEY=... python scripts/serve.py --live
"""

from __future__ import annotations

import argparse

import uvicorn

from vizlink.server import ServerConfig, create_app, load_config


def main():
    parser = argparse.ArgumentParser(description="Serve the vizlink engine API.")
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--fixtures-dir", default=None, help="scripted-backend fixture directory"
    )
    parser.add_argument(
        "--live",
        action="store_true",
        help="use the live HTTP agent backend (AGENT_API_URL / AGENT_API_KEY)",
    )
    args = parser.parse_args()

    config = load_config(args.config) if args.config else ServerConfig()
    if args.port is not None:
        config.port = args.port
    if args.fixtures_dir is not None:
        config.fixtures_dir = args.fixtures_dir
    if args.live:
        config.backend = "live"

    uvicorn.run(create_app(config), host=args.host, port=config.port)


if __name__ == "__main__":
    main()
