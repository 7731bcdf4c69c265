"""Deductive query answering over relational data via schematic answers."""
