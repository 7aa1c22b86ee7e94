"""Distributed archiving of language resources.

One virtual library over many independent archives: OLAC metadata records
with controlled vocabularies, a six-verb harvesting protocol (data
providers, the Vida gateway over single-file ORyX repositories, an archive
registry), and a harvester-fed union catalog with faceted search.
"""

__version__ = "0.4.0"
