"""Fractional-order PID controller design by dominant pole placement."""
