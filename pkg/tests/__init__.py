"""
Test Package untuk CrowdCast
"""
