from django.contrib import admin

from .models import EpochLog, Run, ScenarioResult, TransferWeightLog


class ScenarioResultInline(admin.TabularInline):
    model = ScenarioResult
    extra = 0


@admin.register(Run)
class RunAdmin(admin.ModelAdmin):
    list_display = ['id', 'kind', 'name', 'created_at', 'finished_at']
    list_filter = ['kind', 'created_at']
    search_fields = ['name', 'output_dir']
    inlines = [ScenarioResultInline]
    date_hierarchy = 'created_at'
    ordering = ['-created_at']


@admin.register(ScenarioResult)
class ScenarioResultAdmin(admin.ModelAdmin):
    list_display = ['scenario', 'variant', 'seed', 'source_only_mf1', 'cpfm_mf1', 'upper_bound_mf1', 'run']
    list_filter = ['variant', 'scenario']


@admin.register(EpochLog)
class EpochLogAdmin(admin.ModelAdmin):
    list_display = ['run', 'scenario', 'variant', 'seed', 'epoch', 'ce', 'pr', 'ir', 'seconds']
    list_filter = ['variant']


@admin.register(TransferWeightLog)
class TransferWeightLogAdmin(admin.ModelAdmin):
    list_display = ['run', 'scenario', 'seed', 'epoch', 'teacher', 'eta', 'lam']
