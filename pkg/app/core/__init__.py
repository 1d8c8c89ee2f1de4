"""Configuración, logging, errores y unidades"""
