"""Service configuration: one JSON file, environment-variable overrides.

Precedence: environment > file > defaults. Override variables are named
``MODGUARD_<FIELD>`` with the field upper-cased, e.g. ``MODGUARD_LISTEN``
or ``MODGUARD_EMBEDDING_URL``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    classifier_url: str = ""
    embedding_url: str = ""
    reasoning_url: str = ""
    planner_url: str = ""
    dictionary_url: str = ""
    post_index_path: str = "data/posts.index"
    guideline_index_path: str = "data/guidelines"
    feedback_log_path: str = "data/feedback.jsonl"
    wordlist_path: str = ""
    mode: str = "fallback"  # "planner" | "fallback"
    enabled_tools: list[str] = field(
        default_factory=lambda: [
            "classifier",
            "similar_posts",
            "slang_dictionary",
            "reasoning",
            "guidelines",
        ]
    )
    request_timeout: float = 60.0
    cors_origin: str = "*"
    stubs: bool = False  # wire deterministic in-process stubs, no live endpoints

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        values: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                values.update(json.load(fh))
        config = cls(**values)
        for f in fields(cls):
            env = os.environ.get(f"MODGUARD_{f.name.upper()}")
            if env is None:
                continue
            if f.type in ("float", float):
                setattr(config, f.name, float(env))
            elif f.type in ("bool", bool):
                setattr(config, f.name, env.lower() in ("1", "true", "yes"))
            elif f.name == "enabled_tools":
                setattr(config, f.name, [t.strip() for t in env.split(",") if t.strip()])
            else:
                setattr(config, f.name, env)
        return config
