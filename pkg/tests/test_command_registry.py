#!/usr/bin/env python3
"""
Command Registry Snapshot Test

Checks that every command-line subcommand stays registered after
refactoring, and that every registered handler is defined in the module
that registers it.

This version uses STATIC PARSING (regex) so it runs without importing
the numerical stack.

Usage:
    pytest tests/test_command_registry.py -v
    python tests/test_command_registry.py  # standalone
"""

import re
import sys
from pathlib import Path

COMMANDS_PATH = Path(__file__).parent.parent / "dynoplan" / "commands"

# ============================================
# COMMAND REGISTRY SNAPSHOT
# Total: 6 parsers (4 top-level, 2 under fit)
# ============================================

EXPECTED_COMMANDS = {
    "run",
    "fit",
    "goal",
    "gmm",
    "regions",
    "gen-demos",
}

PARSER_PATTERN = r'\.add_parser\(\s*["\']([^"\']+)["\']'
HANDLER_PATTERN = r'set_defaults\(\s*handler\s*=\s*(\w+)'


def command_sources():
    if not COMMANDS_PATH.exists():
        raise FileNotFoundError(f"Commands package not found: {COMMANDS_PATH}")
    return {path.name: path.read_text(encoding="utf-8")
            for path in sorted(COMMANDS_PATH.glob("*.py")) if not path.name.startswith("_")}


def get_registered_commands():
    """All subcommand names passed to add_parser in dynoplan/commands."""
    commands = set()
    for content in command_sources().values():
        commands.update(re.findall(PARSER_PATTERN, content))
    return commands


def test_all_commands_registered():
    registered = get_registered_commands()

    missing = EXPECTED_COMMANDS - registered
    extra = registered - EXPECTED_COMMANDS

    if missing:
        print("\n[FAIL] MISSING COMMANDS (were expected but not found):")
        for name in sorted(missing):
            print(f"   {name}")

    if extra:
        print("\n[WARN] EXTRA COMMANDS (found but not in snapshot):")
        for name in sorted(extra):
            print(f"   {name}")

    assert len(missing) == 0, f"Missing {len(missing)} commands! See above."
    print(f"\n[OK] All {len(EXPECTED_COMMANDS)} commands are registered.")


def test_handlers_are_defined():
    undefined = []
    for name, content in command_sources().items():
        for handler in re.findall(HANDLER_PATTERN, content):
            if not re.search(rf'^def {handler}\(', content, re.MULTILINE):
                undefined.append(f"{name}: {handler}")
    assert not undefined, f"Handlers registered but not defined: {undefined}"


def test_every_module_is_wired():
    """Each command module with a register() is listed in COMMAND_MODULES."""
    init = (COMMANDS_PATH / "__init__.py").read_text(encoding="utf-8")
    listed = re.search(r'COMMAND_MODULES\s*=\s*\[([^\]]*)\]', init)
    assert listed, "COMMAND_MODULES not found"
    wired = {name.strip() for name in listed.group(1).split(",") if name.strip()}
    with_register = {name[:-3] for name, content in command_sources().items()
                     if re.search(r'^def register\(', content, re.MULTILINE)}
    assert with_register <= wired, f"Not wired: {sorted(with_register - wired)}"


if __name__ == "__main__":
    print("Running Command Registry Tests...\n")

    try:
        test_all_commands_registered()
        test_handlers_are_defined()
        test_every_module_is_wired()
        print(f"\nRegistered: {', '.join(sorted(get_registered_commands()))}")
        print("\n[OK] All command registry tests passed!")

    except AssertionError as e:
        print(f"\n[FAIL] Test failed: {e}")
        sys.exit(1)
