"""Core library: syntax, algebra, numeric semantics, arithmetic and the proof kernel."""
