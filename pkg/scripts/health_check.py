#!/usr/bin/env python3
#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: RelJudge Health Check Script
#
"""
RelJudge Health Check Script
Checks that the configured chat endpoints answer and the dataset files exist
before a long rerank run is started.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import httpx

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from error_handling import ConfigError  # noqa: E402
from models import BackendConfig  # noqa: E402
from utils import load_config  # noqa: E402

logger = logging.getLogger("reljudge")

HEALTHY = ("healthy", "present", "offline")


def models_url(endpoint: str) -> str:
    base = endpoint.rstrip("/")
    return f"{base}/models" if base.endswith("/v1") else f"{base}/v1/models"


class HealthChecker:
    def __init__(self, raw_config: dict, client: httpx.Client | None = None, timeout: float = 5.0):
        self.raw_config = raw_config
        self.client = client or httpx.Client(timeout=timeout)
        self.results = {}

    def backends(self) -> list[BackendConfig]:
        section = self.raw_config.get("backends") or {}
        configs = []
        if section.get("query_analysis"):
            configs.append(section["query_analysis"])
        configs.extend(section.get("judges") or [])
        return [BackendConfig.model_validate(raw) for raw in configs]

    def check_endpoint(self, backend: BackendConfig) -> bool:
        """Check that the endpoint answers and serves the configured model"""
        key = f"backend:{backend.tag}"
        if backend.kind == "scripted":
            self.results[key] = {'status': 'offline', 'script': str(backend.script)}
            return True
        url = models_url(backend.endpoint)
        logger.info("Checking %s at %s...", backend.model, url)
        try:
            response = self.client.get(url)
        except httpx.HTTPError as e:
            self.results[key] = {'status': 'unreachable', 'error': str(e)}
            logger.error("Endpoint %s is unreachable: %s", url, e)
            return False
        if response.status_code != 200:
            self.results[key] = {'status': 'unhealthy', 'code': response.status_code}
            logger.error("Endpoint %s returned status %s", url, response.status_code)
            return False
        try:
            served = [entry.get("id") for entry in response.json().get("data", [])]
        except (ValueError, AttributeError) as e:
            self.results[key] = {'status': 'unhealthy', 'error': f"unexpected model list: {e}"}
            return False
        if backend.model not in served:
            self.results[key] = {'status': 'model_missing', 'served': served}
            logger.error("Model %s is not served by %s (serves %s)", backend.model, url, served)
            return False
        self.results[key] = {'status': 'healthy', 'code': 200}
        logger.info("Endpoint %s is healthy", url)
        return True

    def check_datasets(self) -> bool:
        """Check that every configured dataset file exists"""
        ok = True
        for name, paths in (self.raw_config.get("datasets") or {}).items():
            missing = [
                f"{label}: {paths[label]}"
                for label in ("corpus", "queries", "qrels")
                if paths.get(label) and not Path(paths[label]).exists()
            ]
            if missing:
                self.results[f"dataset:{name}"] = {'status': 'missing', 'error': ", ".join(missing)}
                ok = False
            else:
                self.results[f"dataset:{name}"] = {'status': 'present'}
        return ok

    def get_summary(self):
        """Generate health check summary"""
        summary = {
            'timestamp': datetime.now(tz=timezone.utc).isoformat(),
            'services': self.results
        }
        all_healthy = all(result.get('status') in HEALTHY for result in self.results.values())
        summary['overall'] = 'healthy' if all_healthy else 'unhealthy'
        return summary

    def print_report(self):
        """Print formatted health report"""
        summary = self.get_summary()

        logger.info("%s", "=" * 50)
        logger.info("RelJudge Health Check Report")
        logger.info("%s", "=" * 50)
        logger.info("Timestamp: %s", summary["timestamp"])
        logger.info("Overall Status: %s", summary["overall"].upper())
        logger.info("%s", "-" * 50)

        for service, status in self.results.items():
            health = status.get('status', 'unknown')
            if health in HEALTHY:
                logger.info("%s: %s", service, health)
            else:
                logger.error("%s: %s", service, health)
            if 'error' in status:
                logger.error("Error: %s", status["error"])

        logger.info("%s", "=" * 50)
        return summary['overall'] == 'healthy'

    def run(self) -> bool:
        ok = self.check_datasets()
        for backend in self.backends():
            ok = self.check_endpoint(backend) and ok
        return ok


def main(argv=None):
    import argparse
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    parser = argparse.ArgumentParser(description='RelJudge Health Check')
    parser.add_argument('--config', default='cfg/config.yaml',
                        help='run configuration (default: cfg/config.yaml)')
    parser.add_argument('--json', action='store_true',
                        help='Output as JSON')
    args = parser.parse_args(argv)

    try:
        checker = HealthChecker(load_config(args.config))
    except ConfigError as e:
        logger.error("%s", e)
        return 2

    checker.run()
    if args.json:
        sys.stdout.write(json.dumps(checker.get_summary(), indent=2) + "\n")
        return 0 if checker.get_summary()['overall'] == 'healthy' else 1
    return 0 if checker.print_report() else 1


if __name__ == '__main__':
    sys.exit(main())
