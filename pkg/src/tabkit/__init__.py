"""Tabled logic programming on top of delimited control."""

from .machine import Machine
from .program import ClauseDB, parse_program, parse_query

__all__ = ["Machine", "ClauseDB", "parse_program", "parse_query"]
