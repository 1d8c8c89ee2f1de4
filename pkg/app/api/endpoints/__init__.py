"""
Endpoints de la API
"""
