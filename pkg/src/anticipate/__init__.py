"""Deterministic long-term action anticipation toolkit.

Turns observed video activity into future (verb, noun) action sequences by
aggregating recognizer outputs, selecting in-context exemplars, composing
prompts for a language-model backend, and mapping raw completions back into a
closed verb/noun taxonomy; ships the matching edit-distance and mAP
evaluation protocols.
"""

__version__ = "0.1.0"
