"""The rule language: parsing, printing and interpretation."""

from . import ast
from .ast import dump
from .interp import (RuleProgram, amod, check, compile_to_transition, delayed_assign_step,
                     desugar_program, duration, interpret, parse)
from .parser import RuleError, RuleSyntaxError, parse_ast
from .printer import program as pretty

__all__ = ["ast", "dump", "RuleProgram", "amod", "check", "compile_to_transition",
           "delayed_assign_step", "desugar_program", "duration", "interpret", "parse",
           "RuleError", "RuleSyntaxError", "parse_ast", "pretty"]
