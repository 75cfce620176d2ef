# Commands module - one file per CLI verb, registered on the entry script
from . import demos, fit, regions, run

COMMAND_MODULES = [run, fit, regions, demos]


def register_all(subparsers, parents=()):
    for module in COMMAND_MODULES:
        module.register(subparsers, parents)
