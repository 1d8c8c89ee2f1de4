"""Batería de pruebas de PhotonStats"""
