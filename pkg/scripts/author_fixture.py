#!/usr/bin/env python3
"""Compute the scripted-backend fingerprint for a request.

The scripted backend reports missing fingerprints in its error message;
this prints the same fingerprint ahead of time so a fixture file named
<fingerprint> can be dropped into the fixtures directory.

    python scripts/author_fixture.py --role VisGenerator --model gpt-4o \\
        --prompt-file prompt.txt [--image sketch.png]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from vizlink import AgentRequest, AgentRole, request_fingerprint


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--role", required=True, choices=[r.value for r in AgentRole]
    )
    parser.add_argument("--model", required=True)
    parser.add_argument("--prompt-file", required=True)
    parser.add_argument("--image", help="PNG path (DescriptorVision only)")
    args = parser.parse_args()

    image = Path(args.image).read_bytes() if args.image else None
    request = AgentRequest(
        role=AgentRole(args.role),
        prompt=Path(args.prompt_file).read_text(encoding="utf-8"),
        model_id=args.model,
        image=image,
    )
    print(request_fingerprint(request))


if __name__ == "__main__":
    main()
