"""カートゥーン様関数とN項近似"""
